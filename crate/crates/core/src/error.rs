use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in row for token {token:?}")]
    NonFinite { token: String },

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("query vector has zero norm")]
    ZeroQuery,

    #[error("no candidates to rank")]
    NoCandidates,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error comes from the file system rather than from the
    /// content of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Stream(_))
    }
}
