use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no intruder candidates for topic {topic}")]
    NoIntruder { topic: usize },

    #[error("unknown word under {policy} annotator: {word}")]
    UnknownWord { policy: &'static str, word: String },

    #[error("responses do not match tasks (missing: {missing:?}, duplicate: {duplicate:?}, unknown: {unknown:?})")]
    ResponseMismatch {
        missing: Vec<String>,
        duplicate: Vec<String>,
        unknown: Vec<String>,
    },

    #[error("model snapshot: {0}")]
    Snapshot(String),

    #[error("requires: {stage}")]
    MissingStage { stage: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by a missing upstream artifact or an unmet
    /// precondition rather than a failure of the stage itself.
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::MissingStage { .. })
    }
}
