use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("vortex collision between {i} and {j}: R^2 - x_i.x_j = {gap:e}")]
    Collision { i: usize, j: usize, gap: f64 },

    #[error("non-finite value at step {step}: {what}")]
    Numerical { step: usize, what: String },

    #[error("state is off the declared orbit (defect {defect:e})")]
    OffOrbit { defect: f64 },

    #[error("rejection sampler acceptance rate {rate:e} below 1e-4; try a smaller beta")]
    Efficiency { rate: f64 },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
