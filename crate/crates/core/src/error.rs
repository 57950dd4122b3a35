use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input. `line` is the 1-based line in the source file (header is line 1).
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{estimator}: degenerate series ({reason})")]
    Degenerate {
        estimator: &'static str,
        reason: String,
    },

    #[error("{estimator}: insufficient data ({reason})")]
    InsufficientData {
        estimator: &'static str,
        reason: String,
    },

    #[error("fit domain error: {0}")]
    FitDomain(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn degenerate(estimator: &'static str, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            estimator,
            reason: reason.into(),
        }
    }

    pub(crate) fn insufficient(estimator: &'static str, reason: impl Into<String>) -> Self {
        Error::InsufficientData {
            estimator,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input files or configuration, as opposed
    /// to numeric failures on otherwise valid data.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::Config { .. }
                | Error::Serialization(_)
        )
    }
}
