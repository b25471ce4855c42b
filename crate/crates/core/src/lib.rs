//! Dense finite-dimensional numerics for quantum channels.
//!
//! The crate provides the building blocks for channel-output entropy
//! experiments: bipartite tensor algebra over complex matrices, seeded
//! Gaussian/Haar/isometry ensembles, two channel families (mixtures of
//! unitaries and isometric dilations), Rényi and von Neumann output
//! entropies with a minimum-output-entropy estimator, and fourth-moment
//! Weingarten calculus for exact Haar averages of the two-copy output
//! purity.
//!
//! All values are immutable after construction and operations are pure
//! functions; parallel work is organized around independent seed streams
//! so results do not depend on scheduling.

pub mod channels;
pub mod ensembles;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod tensor;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Tolerance for Hermiticity checks (max elementwise |M - M^dagger|).
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance for unit-trace checks on density operators.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance for unit-norm checks on pure states.
pub const NORM_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as a bug rather than roundoff.
pub const PSD_FLOOR: f64 = -1e-9;
/// Tolerance for spectrum normalization (sum of eigenvalues vs 1).
pub const SPECTRUM_SUM_TOL: f64 = 1e-8;
/// Largest composite Hilbert-space dimension any operation will produce.
pub const MAX_TOTAL_DIM: usize = 1 << 20;
/// Largest dimension for which dense operators are materialized.
pub const MAX_OPERATOR_DIM: usize = 1 << 12;
