use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis of {size} states exceeds the cap of {cap}")]
    BasisTooLarge { size: usize, cap: usize },

    #[error("matrix is not hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("kernel is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),

    #[error("operator entry changes particle number by {0}, outside its declared band")]
    BandViolation(i64),

    #[error("Krylov propagation did not converge (step {step:.3e}, estimate {estimate:.3e})")]
    KrylovNotConverged { step: f64, estimate: f64 },

    #[error("norm drift {drift:.3e} at t = {time} exceeds tolerance")]
    NormDrift { time: f64, drift: f64 },

    #[error("tangency defect {defect:.3e} at t = {time} exceeds tolerance")]
    TangencyDefect { time: f64, defect: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("time {time} outside trajectory range [{start}, {end}]")]
    OutOfRange { time: f64, start: f64, end: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
