use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the core pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("feature arity mismatch: model expects {expected} columns, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("{dataset}/{learner}: {invalid} of {total} bootstrap iterations were invalid")]
    TooManyInvalid {
        dataset: String,
        learner: String,
        invalid: usize,
        total: usize,
    },

    #[error("internal: {0}")]
    Internal(String),
}

impl Error {
    /// True when the error stems from user-supplied input or configuration
    /// rather than from a defect in the pipeline itself.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
