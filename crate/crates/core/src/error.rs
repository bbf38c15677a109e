use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("class `{label}` would receive {labeled} labeled mentions out of {available}")]
    InsufficientClassCount {
        label: String,
        labeled: usize,
        available: usize,
    },
    #[error("mention {index} has no gold label; stratified splitting needs every label")]
    MissingLabel { index: usize },
    #[error("unknown preset `{0}` (expected semeval-like or tacred-like)")]
    UnknownPreset(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mention {index}: {message}")]
    SpanOutOfBounds { index: usize, message: String },
    #[error("invalid label inventory: {0}")]
    InvalidInventory(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("labeled set is empty")]
    EmptyLabeledSet,
    #[error("gradient length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sample with reward {reward} does not exceed the acceptance threshold {lambda}")]
    RejectedSample { reward: f64, lambda: f64 },
    #[error("episode batch is empty")]
    EmptyBatch,
    #[error("every token of the mention lies inside an entity span")]
    NothingMaskable,
    #[error("fill model returned {got} tokens for {expected} masked positions")]
    FillLengthMismatch { expected: usize, got: usize },
    #[error("prediction set is empty (no data yet)")]
    EmptyPredictionSet,
    #[error("no hidden gold label for source mention {0}")]
    MissingGold(usize),
    #[error("degenerate trajectory: {0}")]
    DegenerateTrajectory(String),
    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Context {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable machine-readable class name, printed by the CLI on failure.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InsufficientClassCount { .. } => "InsufficientClassCount",
            Error::MissingLabel { .. } => "MissingLabel",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::Parse { .. } => "ParseError",
            Error::SpanOutOfBounds { .. } => "SpanOutOfBounds",
            Error::InvalidInventory(_) => "InvalidInventory",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptyLabeledSet => "EmptyLabeledSet",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::RejectedSample { .. } => "RejectedSample",
            Error::EmptyBatch => "EmptyBatch",
            Error::NothingMaskable => "NothingMaskable",
            Error::FillLengthMismatch { .. } => "FillLengthMismatch",
            Error::EmptyPredictionSet => "EmptyPredictionSet",
            Error::MissingGold(_) => "MissingGold",
            Error::DegenerateTrajectory(_) => "DegenerateTrajectory",
            Error::IncompatibleRuns(_) => "IncompatibleRuns",
            Error::Io { .. } => "IoError",
            Error::Context { source, .. } => source.class(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn with_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::Context { .. }) => e,
            e => Error::Context {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
