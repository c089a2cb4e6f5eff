use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical integration did not converge (estimate {estimate}, error {error})")]
    Integration { estimate: f64, error: f64 },

    #[error("conversion failed: {message} (residual {residual})")]
    Conversion { message: String, residual: f64 },

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("approximation failed: {0}")]
    Approximation(String),

    #[error("chain {chain} aborted at iteration {iteration}: {reason}")]
    ChainAborted {
        chain: usize,
        iteration: usize,
        reason: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
