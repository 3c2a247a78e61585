//! Error taxonomy shared by every module.

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure mode the library reports.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A function argument violated its documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state or input carried a non-finite value.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Scenario configuration failed validation; every violation is listed.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    /// A vehicle state left the representable range mid-run.
    #[error("diverged at step {step} (t = {time} s): vehicle {vehicle} is non-finite")]
    Divergence {
        step: usize,
        vehicle: usize,
        time: f64,
    },

    /// A region sweep asked for more grid points than the hard budget allows.
    #[error("sweep size {points} exceeds the {budget}-point budget")]
    BudgetExceeded { points: usize, budget: usize },
}
