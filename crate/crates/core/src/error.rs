use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SeganError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SeganError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SeganError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SeganError::Io {
            path: path.into(),
            source,
        }
    }
}
