use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),

    #[error("malformed CSV at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("column `{column}` at line {line}: cannot parse `{value}` as a number")]
    NonNumeric {
        column: String,
        line: u64,
        value: String,
    },

    #[error("column `{column}` at line {line}: `{value}` is not a binary label")]
    BadLabel {
        column: String,
        line: u64,
        value: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset is empty{0}")]
    EmptyDataset(&'static str),

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("requested {requested} clusters but only {achievable} distinct rows exist")]
    TooFewDistinctRows { requested: usize, achievable: usize },

    #[error("N = {n} exceeds the brute-force limit of {limit} points")]
    SizeGuard { n: usize, limit: usize },

    #[error("labels contain a single class; {0}")]
    SingleClass(&'static str),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
