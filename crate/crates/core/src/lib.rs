//! Differentially private spatial histograms over a 2D grid.
//!
//! The main entry point is [`htf::release`], which partitions a
//! [`FrequencyMatrix`] into homogeneous regions and publishes noisy region
//! counts. The [`baselines`] module holds comparison mechanisms and
//! [`queries`] evaluates releases on range-count workloads.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod histogram;
pub mod htf;
pub mod mechanism;
pub mod privacy;
pub mod queries;

pub use error::{Error, Result};
pub use grid::{Bounds, FrequencyMatrix, PointRecord, Region};
pub use histogram::{Leaf, PrivateHistogram};
pub use htf::{HtfParams, PartitionBudget};
pub use mechanism::{Mechanism, Release};
pub use privacy::{BudgetLedger, BudgetSplit, NodePath, NoiseSource};
pub use queries::{answer_query, evaluate, EvalReport, RangeQuery, WorkloadSpec};
