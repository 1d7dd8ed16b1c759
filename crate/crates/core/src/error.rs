use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid score at class index {index}: {value}")]
    InvalidScore { index: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("{path}: row {row}: {message}")]
    Format {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Value {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("sensor {0} has no metadata entry")]
    MissingMetadata(String),

    #[error("unknown sensor {0}")]
    UnknownSensor(String),

    #[error("insufficient {side} neighbors for {target}: need {needed}, found {found}")]
    InsufficientNeighbors {
        target: String,
        side: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("matrix has {rows} rows, need at least {needed} to build one instance")]
    EmptyStream { rows: usize, needed: usize },

    #[error("stream has {len} instances, need more than {n_init}")]
    InsufficientData { len: usize, n_init: usize },

    #[error("{path}:{line}:{column}: {message}")]
    Spec {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model used before initialization")]
    Uninitialized,

    #[error("run aborted at instance {index}: {source}")]
    Aborted { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
