use std::path::PathBuf;

use crate::kb::Fact;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: relation `{relation}` has arity {expected} but {found} entities were given")]
    ArityMismatch {
        line: usize,
        relation: String,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: duplicate fact in {split} split")]
    DuplicateFact { line: usize, split: &'static str },

    #[error("unknown data format `{0}` (expected tsv-triple or tsv-nary)")]
    UnknownFormat(String),

    #[error("position {position} out of range for arity {arity}")]
    PositionOutOfRange { position: usize, arity: usize },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("invalid fact: {0}")]
    InvalidFact(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid box: lower bound exceeds upper bound at dimension {dim}")]
    InvalidBox { dim: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("inconsistent rule set: {0}")]
    Inconsistent(crate::rules::ConflictReport),

    #[error("non-finite loss at epoch {epoch}; offending batch: {batch:?}")]
    NonFiniteLoss { epoch: usize, batch: Vec<Fact> },

    #[error("internal invariant breach: {0}")]
    Internal(String),

    #[error("fact cannot be made false within the dimension budget: {0}")]
    NotConstructible(String),

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

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
