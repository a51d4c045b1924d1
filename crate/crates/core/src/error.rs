use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input has dimension {got}, network expects {expected}")]
    InputShape { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {0} (at most 3 supported)")]
    UnsupportedDimension(usize),

    #[error("non-finite value {value} at node {node:?}")]
    NonFinite { node: Vec<f64>, value: f64 },

    #[error("activation {0} has no nonvanishing derivative on the search grid")]
    DegenerateActivation(String),

    #[error("construction failed: {0}")]
    ConstructionFailure(String),

    #[error("no proved rate constant for activation {0}")]
    UnsupportedRate(String),

    #[error("all trials diverged")]
    ExperimentFailure,

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
