use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing table {table}: expected {path}")]
    MissingTable { table: &'static str, path: PathBuf },

    #[error("{table} line {line}: {message}")]
    Row {
        table: &'static str,
        line: u64,
        message: String,
    },

    #[error("integrity violation in {table} line {line}: {message}")]
    Integrity {
        table: &'static str,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("invalid ICD code {raw:?}: {reason}")]
    IcdParse { raw: String, reason: String },

    #[error("classification error: {0}")]
    Classification(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

/// Coarse error classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Integrity,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn icd(raw: &str, reason: impl Into<String>) -> Self {
        Error::IcdParse {
            raw: raw.to_string(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Usage(_) | Error::Config(_) => ErrorClass::Usage,
            Error::Integrity { .. } => ErrorClass::Integrity,
            _ => ErrorClass::Data,
        }
    }
}
