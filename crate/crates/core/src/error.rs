use thiserror::Error;

use crate::policy::FairnessNotion;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates a construction invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument is outside the domain of the function (e.g. p outside (0,1)).
    #[error("domain error: {0}")]
    Domain(String),

    /// A fairness constraint (or a crime level) cannot be met.
    #[error("infeasible {notion}: {reason}")]
    Infeasible {
        notion: String,
        reason: String,
    },

    /// A structural claim was requested on a scenario that does not satisfy
    /// its preconditions.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Police best response has no interior solution.
    #[error("no interior equilibrium: {0}")]
    NonInteriorEquilibrium(String),

    /// Root bracketing or convergence failure.
    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn infeasible(notion: impl std::fmt::Display, reason: impl Into<String>) -> Self {
        Error::Infeasible {
            notion: notion.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn infeasible_notion(notion: FairnessNotion, reason: impl Into<String>) -> Self {
        Self::infeasible(notion, reason)
    }

    /// True for the solver-side failures (infeasibility, corner equilibria,
    /// bracketing), false for bad input and unmet hypotheses.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. } | Error::NonInteriorEquilibrium(_) | Error::Solver(_)
        )
    }
}
