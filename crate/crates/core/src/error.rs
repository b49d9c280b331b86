//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Matrix shape mismatch.
    #[error("dimension error: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    /// Numerical failure (e.g. Cholesky on a non-SPD matrix).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Structural invariant of an input violated.
    #[error("validation error: {0}")]
    Validation(String),
    /// Scenario/config file problem, with the offending field path.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    /// Geometry so degenerate the requested construction is undefined.
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
