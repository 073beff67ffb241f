use std::io;
use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or missing configuration; `field` names the offending key.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(#[from] lexbridge::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_io(&self) -> bool {
        match self {
            CliError::Io { .. } => true,
            CliError::Core(e) => e.is_io(),
            CliError::Invalid { .. } => false,
        }
    }

    /// 1 for validation failures, 2 for I/O failures.
    pub fn exit_code(&self) -> u8 {
        if self.is_io() {
            2
        } else {
            1
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = if self.is_io() { "io" } else { "validation" };
        match self {
            CliError::Invalid { field, message } => json!({
                "error": kind,
                "field": field,
                "message": message,
            }),
            other => json!({
                "error": kind,
                "message": other.to_string(),
            }),
        }
    }
}
