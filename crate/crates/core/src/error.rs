use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff {cutoff} too small: tail bound {tail:.3e} exceeds ceiling {ceiling:.3e}")]
    CutoffTooSmall {
        cutoff: usize,
        tail: f64,
        ceiling: f64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular kernel: {0}")]
    SingularKernel(String),
    #[error("unitarity violation: max deviation {0:.3e}")]
    UnitarityViolation(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("unsupported state: {0}")]
    UnsupportedState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
