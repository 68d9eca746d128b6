//! Differential-privacy primitives shared by every mechanism in the crate.

mod budget;
mod ledger;
mod noise;

pub use budget::{
    geometric_level_budget, geometric_level_budget_with_fanout, uniform_level_budget, BudgetSplit,
    BUDGET_TOLERANCE,
};
pub use ledger::{BudgetLedger, LedgerEntry, NodePath, PathTotal};
pub use noise::{em_probabilities, laplace_sample, NoiseSource, NoiseStream};
