use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid level spec: {0}")]
    InvalidLevels(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no usable vectors")]
    NoUsableVectors,

    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),

    #[error("training diverged at epoch {epoch}: non-finite loss (learning rate too large?)")]
    Diverged { epoch: usize },

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("level skipped: state is at level {state_level}, asked to refine level {requested}")]
    LevelSkipped { state_level: usize, requested: usize },

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("inconsistent dimensionality: record {record} has d={found}, expected {expected}")]
    InconsistentDimensionality {
        record: usize,
        expected: usize,
        found: usize,
    },

    #[error("truncated record {record}")]
    TruncatedRecord { record: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
