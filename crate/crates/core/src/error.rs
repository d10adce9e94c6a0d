use thiserror::Error;

use crate::structures::SpaceKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("illegal part {part} for space {space}")]
    IllegalPart { part: String, space: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("space {space} exceeds the enumeration cap of {cap}")]
    SpaceTooLarge { space: String, cap: usize },

    #[error("operation requires a {expected} space, got {actual}")]
    WrongSpace {
        expected: &'static str,
        actual: SpaceKind,
    },

    #[error("objects live on different spaces: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("loss {kind} is not valid here: {reason}")]
    WrongLossKind { kind: String, reason: &'static str },

    #[error("no output has a finite score")]
    NoFiniteOutput,

    #[error("matrix-tree Laplacian is numerically singular (log|det| = {log_det})")]
    NumericallySingular { log_det: f64 },

    #[error("invalid score: {0}")]
    InvalidScore(String),

    #[error("invalid output: {0}")]
    InvalidOutput(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distribution gives zero mass to {count} outputs; realizability needs full support")]
    UnsupportedOutputs { count: usize },

    #[error("no distribution satisfies the constraints; violated: {}", violated.join(", "))]
    Infeasible { violated: Vec<String> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
