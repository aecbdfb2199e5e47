use std::path::PathBuf;

/// Errors produced anywhere in the screening pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),
    #[error("corpus has unlabeled citations: {0}")]
    Unlabeled(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("out-of-vocabulary word: {0}")]
    OutOfVocabulary(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot resolve J: {0}")]
    ResolveJ(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
