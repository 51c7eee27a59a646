use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate note id `{0}`")]
    DuplicateNoteId(String),

    #[error("duplicate period id `{0}`")]
    DuplicatePeriodId(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metric is undefined: {0}")]
    UndefinedMetric(String),

    #[error("vocabulary is empty after frequency filtering")]
    EmptyVocabulary,

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("feature width mismatch: model expects {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure while
    /// running; the CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidInput(_) | Error::WidthMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
