//! Library surface of the experiment runner: command implementations,
//! record store, report formats, and the SVG writer. The binary in
//! `main.rs` is a thin argument-parsing shell over these.

pub mod commands;
pub mod record;
pub mod report;
pub mod svg;

pub use commands::{
    cmd_bounds, cmd_purity, cmd_ru_violation, cmd_spectrum, cmd_violation, BoundsCmdParams,
    CommandError, PurityParams, RuViolationParams, SpectrumParams, UnitaryFamily, ViolationParams,
};
pub use record::{ExperimentRecord, RecordStore};
pub use report::ViolationReport;
