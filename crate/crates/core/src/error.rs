use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("autodiff: {0}")]
    Tape(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("features: {0}")]
    Features(String),

    #[error("config: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: {msg}")]
    Diverged {
        epoch: usize,
        batch: usize,
        msg: String,
    },

    #[error("grid configuration #{index} ({label}): {source}")]
    Grid {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True when the error stems from bad user input (files, configs,
    /// arguments) rather than a failure during computation.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::Dataset(_)
            | Error::Features(_)
            | Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Checkpoint(_)
            | Error::Io { .. }
            | Error::Json(_) => true,
            Error::Grid { source, .. } => source.is_input_error(),
            Error::Shape { .. } | Error::NonFinite(_) | Error::Tape(_) | Error::Diverged { .. } => {
                false
            }
        }
    }
}
