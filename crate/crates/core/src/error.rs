use thiserror::Error;

use crate::taxonomy::Dimension;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. Each module reports through this single
/// enum so callers (CLI, service) can map them to one error report format.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown source tag `{0}`")]
    UnknownSource(String),

    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),

    #[error("unknown argument id `{0}`")]
    UnknownArgument(String),

    #[error("malformed record: {0}")]
    Structural(#[from] crate::taxonomy::StructuralError),

    #[error("rating {0} is outside the ordinal range 1..=3")]
    RatingOutOfRange(i64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unequal annotator counts: argument `{argument_id}` has {found}, expected {expected}")]
    UnequalAnnotatorCount {
        argument_id: String,
        expected: usize,
        found: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no finite likelihood in any restart for dimension {0}")]
    NonFiniteLikelihood(Dimension),

    #[error("coverage gaps: {missing} missing and {unexpected} unexpected predictions (first: {first})")]
    Coverage {
        missing: usize,
        unexpected: usize,
        first: String,
    },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("store is locked by another writer: {0}")]
    Locked(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
