//! Threshold classification policies when the base rate of the classified
//! behaviour responds to the policy itself.
//!
//! Agents in two groups choose whether to offend by comparing a private
//! marginal benefit against the *disincentive* a policy creates (the gap
//! between its true and false positive rates). The crate computes
//! crime-minimizing policies, the best policy under each of five fairness
//! constraints, the police inspection game built on top of that model, and
//! independent brute-force and Monte Carlo checks of all of it.
//!
//! Module map:
//!
//! - [`signal`]: location-scale signal families, disincentive geometry.
//! - [`population`]: outside-option survivor functions and scenarios.
//! - [`policy`]: per-group error rates, crime rates and posteriors.
//! - [`optimize`]: unconstrained and fairness-constrained solvers plus the
//!   structural checks in [`optimize::verify`].
//! - [`inspection`]: capacity-constrained inspection game.
//! - [`oracle`]: grid search and agent-level simulation.
//! - [`scenarios`]: the fixed scenarios used across tests and the CLI.

pub mod error;
pub mod inspection;
pub mod numeric;
pub mod optimize;
pub mod oracle;
pub mod policy;
pub mod population;
pub mod scenarios;
pub mod signal;

pub use error::{Error, Result};
pub use inspection::{GameSolution, InspectionProfile};
pub use optimize::{FairSolution, NotionComparison};
pub use policy::{FairnessNotion, GroupMetrics, ThresholdPolicy};
pub use population::{Group, Scenario, SurvivorFunction};
pub use signal::{BaseDensity, DisincentiveBounds, Hypothesis, SignalStructure};
