//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("superpixel index {index} out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("no training samples above cutoff")]
    EmptyTrainingSet,

    #[error("non-finite {what} encountered: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("linear system is singular or indefinite: {diagnostic}")]
    SingularSystem { diagnostic: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("split oversubscribed: train {train} + validation {validation} > {total} shots")]
    OversubscribedSplit {
        train: usize,
        validation: usize,
        total: usize,
    },

    #[error("too few samples: need at least {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable category used in CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::EmptyTrainingSet => "no-training-samples",
            Error::NonFinite { .. } => "non-finite",
            Error::SingularSystem { .. } => "singular-system",
            Error::InvalidConfig(_) => "invalid-config",
            Error::OversubscribedSplit { .. } => "oversubscribed-split",
            Error::TooFewSamples { .. } => "too-few-samples",
            Error::Parse { .. } => "parse-error",
            Error::Io(_) => "io-error",
        }
    }
}
