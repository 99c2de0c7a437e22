//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: classifier expects {expected} features, sample has {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid group index {group} (p = {p})")]
    InvalidGroup { group: usize, p: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("group {group} has no samples")]
    EmptyGroup { group: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("robustness assumption violated: min lambda {lambda} <= eta + delta {budget}")]
    AssumptionViolated { lambda: f64, budget: f64 },

    #[error("distribution mismatch: {0}")]
    DistributionMismatch(String),

    #[error("objective not finite at initialization after all restarts")]
    NonFiniteObjective,

    #[error("could not split dataset with every group on both sides")]
    DegenerateSplit,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
