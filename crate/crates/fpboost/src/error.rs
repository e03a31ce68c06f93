//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A column named in the schema is missing or the schema itself is inconsistent.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell failed to parse; `row` is the 1-based data row (header excluded).
    #[error("parse error in row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Input data violates a precondition (negative time, NaN feature, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A model or search configuration field is out of range.
    #[error("invalid config: field `{field}`: {message}")]
    Config { field: &'static str, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Concordance is undefined without at least one comparable pair.
    #[error("no comparable pairs")]
    NoComparablePairs,

    /// Model file is malformed, truncated, or has an unknown format version.
    #[error("model format error: {0}")]
    ModelFormat(String),

    /// Every tuning trial failed; the message lists per-trial reasons.
    #[error("all trials failed:\n{0}")]
    AllTrialsFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
