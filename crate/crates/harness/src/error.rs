use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}:{line}: parse error: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: schema version {found} is not supported (expected {expected})", file.display())]
    SchemaVersionMismatch {
        file: PathBuf,
        line: usize,
        found: u64,
        expected: u64,
    },

    #[error("{}:{line}: invalid panel: {source}", file.display())]
    InvalidPanel {
        file: PathBuf,
        line: usize,
        #[source]
        source: synapse_core::Error,
    },

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("no methods requested")]
    NoMethods,

    #[error("method `{0}` was not evaluated")]
    MissingMethod(String),

    #[error("panel `{series}`: {source}")]
    Panel {
        series: String,
        #[source]
        source: synapse_core::Error,
    },

    #[error(transparent)]
    Core(#[from] synapse_core::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report encoding failed: {0}")]
    Encode(String),
}

impl HarnessError {
    /// Whether the error stems from invalid input data rather than a
    /// failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HarnessError::Parse { .. }
                | HarnessError::SchemaVersionMismatch { .. }
                | HarnessError::InvalidPanel { .. }
                | HarnessError::UnknownMethod(_)
                | HarnessError::NoMethods
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
