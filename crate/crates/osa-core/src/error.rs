//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, numerics, and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OsaError {
    /// Model parameters violate a construction invariant.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// A numeric argument is outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A Bayes update was requested for an observation with zero probability
    /// under the current belief.
    #[error("impossible observation: k={k} has zero probability under the current belief")]
    ImpossibleObservation { k: u8 },

    /// An exact solver or evaluator would need more tree nodes than allowed.
    #[error("node budget exceeded: {required} nodes required, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },

    /// The remaining primary-user throughput requirement cannot be met from
    /// the given slot onward.
    #[error("infeasible throughput requirement at slot {slot}: {detail}")]
    InfeasibleRequirement { slot: usize, detail: String },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, OsaError>;
