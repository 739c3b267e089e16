use thiserror::Error;

/// Errors raised anywhere in the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("problem of size {rows}x{cols} exceeds the exact solver cap {cap}; use w_p_entropic instead")]
    Capacity { rows: usize, cols: usize, cap: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("numerical failure: {reason} (residual estimate {residual:e})")]
    Numerical { reason: String, residual: f64 },

    #[error("test function rejected: {0}")]
    RejectedFunction(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("coupling integrity: {0}")]
    Coupling(String),

    #[error("wrong variant: {0}")]
    WrongVariant(String),

    #[error("grid alignment: {0}")]
    Alignment(String),

    #[error("pairing: {0}")]
    Pairing(String),

    #[error("model evaluation failed for particle {particle}: {reason}")]
    Model { particle: usize, reason: String },

    #[error("diagnostic: {0}")]
    Diagnostic(String),

    #[error("range: {0}")]
    Range(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
