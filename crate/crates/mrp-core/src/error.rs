//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Invalid model/config parameter; names the offending field.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation only defined for a restricted case (e.g. symmetric chain,
    /// mark-independent kernels) that the input does not satisfy.
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// Numerical failure (non-convergence, singular system, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Requested accuracy could not be certified (grid too coarse, truncation
    /// not converged).
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// Hazard/survival evaluation where the distribution has saturated.
    #[error("saturation: {0}")]
    Saturation(String),

    /// Not enough data for the requested estimator.
    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Input parse failure with 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), reason: reason.into() }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
