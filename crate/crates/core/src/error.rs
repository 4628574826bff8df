use thiserror::Error;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0} (supported: 2..={max})", max = crate::space::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("non-finite coordinate in point")]
    NonFiniteCoordinate,

    #[error("invalid map descriptor: {0}")]
    InvalidMap(String),

    #[error("point {point} lies within {distance:.3e} of the branch set (minimum {required:.3e})")]
    NearBranchSet {
        point: String,
        distance: f64,
        required: f64,
    },

    #[error("preimage budget exceeded: {required} atoms required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("point is not periodic at tolerance: chordal defect {defect:.3e}")]
    NotPeriodic { defect: f64 },

    #[error("seed lies in the exceptional set (its backward orbit is finite)")]
    ExceptionalSeed,

    #[error("degenerate condenser: {0}")]
    DegenerateCondenser(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
