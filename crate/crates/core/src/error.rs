use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OcsError>;

#[derive(Debug, Error)]
pub enum OcsError {
    #[error("{name} = {value} is out of range: expected {expected}")]
    InvalidRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),

    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate pair ({a}, {b}): k_aa + k_bb - 2k_ab = {denominator:e}")]
    DegeneratePair { a: usize, b: usize, denominator: f64 },

    #[error("no working pair makes progress")]
    NoProgress,

    #[error("dataset needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("line {line}: feature index {index} does not ascend (previous {previous})")]
    NonAscendingIndex {
        line: usize,
        index: usize,
        previous: usize,
    },

    #[error("model file version {found} not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("plot data requires 2-dimensional features, got {0}")]
    NotTwoDimensional(usize),

    #[error("projection target infeasible: {0}")]
    Infeasible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl OcsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OcsError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than by the caller's
    /// parameters or the solver.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            OcsError::DimensionMismatch { .. }
                | OcsError::TooFewSamples(_)
                | OcsError::Parse { .. }
                | OcsError::RaggedRows { .. }
                | OcsError::NonFiniteValue { .. }
                | OcsError::NonAscendingIndex { .. }
                | OcsError::VersionMismatch { .. }
                | OcsError::CorruptModel(_)
                | OcsError::NotTwoDimensional(_)
                | OcsError::Io { .. }
        )
    }
}
