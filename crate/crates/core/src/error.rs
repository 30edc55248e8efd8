use thiserror::Error;

/// Errors raised by kernels, solvers, samplers and report builders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HawkesError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query t={t} outside tabulated range [0, {max}]")]
    OutOfRange { t: f64, max: f64 },

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("step size: {0}")]
    StepSize(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("horizon mismatch: need {needed}, have {available}")]
    Horizon { needed: f64, available: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HawkesError {
    fn from(e: std::io::Error) -> Self {
        HawkesError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HawkesError>;
