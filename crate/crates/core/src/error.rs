use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NimtError>;

#[derive(Debug, Error)]
pub enum NimtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("ingest error in {path} at {position}: {message}")]
    Ingest {
        path: PathBuf,
        position: String,
        message: String,
    },

    #[error("iteration {iteration}: {message}")]
    Runtime { iteration: usize, message: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("assertion `{check}` failed at iteration {iteration} (slack {slack:e})")]
    AssertionFailed {
        check: &'static str,
        iteration: usize,
        slack: f64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl NimtError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        NimtError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NimtError::Io {
            path: path.into(),
            source,
        }
    }
}
