use thiserror::Error;

/// Errors produced by dataset handling, estimation, and sampling.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A quantity is undefined for the given parameters (zero denominator).
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    /// Closed-form estimation failed (for example, zero sample covariance).
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Requested targets cannot be realised by any dataset.
    #[error("unsatisfiable target: {0}")]
    Unsatisfiable(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
