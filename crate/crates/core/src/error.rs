use thiserror::Error;

/// Errors raised by the physics and oracle routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation dimension {dim} too small for occupation {n_bar}; need at least {required_dim}")]
    InadequateTruncation {
        dim: usize,
        n_bar: f64,
        required_dim: usize,
    },

    #[error("time step {dt} violates the stability guard; use dt <= {suggested_dt}")]
    Stability { dt: f64, suggested_dt: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("steady state not reached after {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("csv output failed: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}
