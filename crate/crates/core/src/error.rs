use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {what} of length {len}")]
    Range {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),

    #[error("invalid table {id:?}: {reason}")]
    InvalidTable { id: String, reason: String },

    #[error("duplicate table id {0:?}")]
    DuplicateId(String),

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("inconsistent graph: {0}")]
    Consistency(String),

    #[error("equipment {0:?} has no applicable quantities")]
    NoQuantity(String),

    #[error("quantity {0:?} has no applicable units")]
    NoUnit(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("alignment error in table {table:?}: {message}")]
    Alignment { table: String, message: String },

    #[error("sequence of {len} tokens exceeds the maximum of {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("probe error: {0}")]
    Probe(String),

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

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
