use std::io;
use std::path::PathBuf;

/// Failures of the command-line layer. Verification failures are not errors:
/// they are reported and mapped to their own exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("malformed trajectory dump, line {line}: {reason}")]
    Dump { line: usize, reason: String },

    #[error(transparent)]
    Core(#[from] tmodes_core::Error),
}

impl AppError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        AppError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        AppError::Csv(e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
