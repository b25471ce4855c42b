use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimOverflow { dim: usize, max: usize },

    #[error("matrix is not Hermitian: max |M - M^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("vector is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("operator trace {trace:.12} is not 1 within tolerance")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not an isometry: max |V^dagger V - I| = {defect:.3e}")]
    NotIsometry { defect: f64 },

    #[error("operator has eigenvalue {value:.3e} below the PSD floor")]
    NotPositive { value: f64 },

    #[error("spectrum sums to {sum:.12}, not 1 within tolerance")]
    SpectrumNotNormalized { sum: f64 },

    #[error("invalid entropy order p = {p}: {reason}")]
    InvalidOrder { p: f64, reason: &'static str },

    #[error("parameter {name} = {value} out of range: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}
