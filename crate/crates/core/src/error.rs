use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the coding toolkit.
///
/// Variants are split along the line the command-line front end cares about:
/// problems with input data (files, records, configuration) versus failures
/// while computing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A record violates a data-model invariant; `record` names it.
    #[error("invalid record {record}: {message}")]
    Invalid { record: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("feature fingerprint mismatch: expected {expected}, got {actual}")]
    Fingerprint { expected: String, actual: String },

    #[error("{0}")]
    Model(String),
}

impl Error {
    pub(crate) fn invalid(record: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            record: record.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the inputs rather than by computation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Parse { .. } | Error::Invalid { .. } | Error::Fingerprint { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
