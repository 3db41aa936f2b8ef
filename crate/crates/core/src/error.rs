use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank mismatch: model has rank {model}, function has rank {function}")]
    RankMismatch { model: usize, function: usize },

    #[error("element does not lie in {0}")]
    NotInSubspace(String),

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("coordinate {index} is not positive ({value})")]
    NonPositive { index: usize, value: f64 },

    #[error("model consistency check failed: {0}")]
    Inconsistent(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
