//! Error type shared across the crate.
//!
//! Errors are split into two classes that map onto the CLI exit codes:
//! input errors (bad files, malformed manifests — exit 2) and
//! computation precondition failures (exit 3).

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed content in an input file. `line` is 1-based.
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Manifest-level validation failure (missing file, count mismatch,
    /// bad doc ranges, unknown system name).
    #[error("{0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A metric or test was invoked on data that does not satisfy its
    /// precondition (empty reference, missing annotations, length mismatch).
    #[error("{0}")]
    Precondition(String),
}

impl Error {
    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable CLI exit code: 2 for input errors, 3 for precondition failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Manifest(_) | Error::Io { .. } => 2,
            Error::Precondition(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
