//! Homogeneous tree release.
//!
//! A release runs three stages: the tree height is estimated from a noisy
//! record count, the domain is partitioned by private homogeneity-driven
//! splits, and the resulting tree is perturbed top-down with geometrically
//! growing budgets, pruning nodes whose noisy count or extent is small.
//! Only the surviving leaves are published.

mod height;
mod objective;
mod perturb;
mod search;
mod tree;

pub use height::{estimate_height, height_from_count, max_height, DEFAULT_C0};
pub use objective::{
    noisy_split_baseline, optimal_split_exact, split_objective, SplitChoice, OBJECTIVE_SENSITIVITY,
};
pub use perturb::{perturb_and_prune, PerturbSettings};
pub use search::get_split_point;
pub use tree::{build_partitioning, PartitionSettings, TreeNode};

use crate::error::{Error, Result};
use crate::grid::FrequencyMatrix;
use crate::histogram::PrivateHistogram;
use crate::mechanism::Release;
use crate::privacy::{BudgetLedger, BudgetSplit, NodePath, NoiseSource};

/// How the partitioning budget is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionBudget {
    /// Total partitioning budget, spread uniformly over the `h` levels.
    Total(f64),
    /// Fixed budget per level; the data budget absorbs whatever `h` leaves.
    PerLevel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtfParams {
    pub eps_tot: f64,
    /// Spent on the noisy record count that sets the height. Unused when
    /// `height_override` is set; the data budget then absorbs it.
    pub eps_height: f64,
    pub partition: PartitionBudget,
    /// Search rounds `T` of the split estimator.
    pub rounds: u32,
    pub stop_count: f64,
    pub stop_cells: usize,
    pub height_override: Option<u32>,
    pub c0: f64,
}

impl Default for HtfParams {
    fn default() -> Self {
        Self {
            eps_tot: 0.1,
            eps_height: 1e-4,
            partition: PartitionBudget::PerLevel(5e-4),
            rounds: 3,
            stop_count: 100.0,
            stop_cells: 5,
            height_override: None,
            c0: DEFAULT_C0,
        }
    }
}

impl HtfParams {
    fn height_budget(&self) -> f64 {
        if self.height_override.is_some() {
            0.0
        } else {
            self.eps_height
        }
    }

    /// Budget decomposition once the height is known.
    pub fn budget_for_height(&self, h: u32) -> Result<BudgetSplit> {
        match self.partition {
            PartitionBudget::Total(eps_prt) => {
                BudgetSplit::from_total(self.eps_tot, eps_prt, self.height_budget())
            }
            PartitionBudget::PerLevel(level) => {
                BudgetSplit::from_level(self.eps_tot, level, self.height_budget(), h)
            }
        }
    }

    /// Checks everything that can be checked without touching the data,
    /// including that the data budget stays positive at the deepest height
    /// the estimator can return on a `rows x cols` grid.
    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("search rounds T must be at least 1".into()));
        }
        if self.stop_cells == 0 {
            return Err(Error::Config("stop_cells must be at least 1".into()));
        }
        if !self.stop_count.is_finite() {
            return Err(Error::Config("stop_count must be finite".into()));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::Config(format!(
                "c0 must be positive, got {}",
                self.c0
            )));
        }
        match self.height_override {
            Some(0) => return Err(Error::Config("height override must be at least 1".into())),
            None if !(self.eps_height > 0.0) => {
                return Err(Error::Config(
                    "height estimation needs eps_height > 0".into(),
                ))
            }
            _ => {}
        }
        let worst = self
            .height_override
            .unwrap_or_else(|| max_height(rows, cols));
        self.budget_for_height(worst).map(|_| ())
    }
}

/// Full pipeline: height estimate, partitioning, perturbation and pruning.
pub fn release(f: &FrequencyMatrix, params: &HtfParams, noise: &NoiseSource) -> Result<Release> {
    params.validate(f.rows(), f.cols())?;
    let mut ledger = BudgetLedger::new();
    let root = NodePath::root();

    let h = match params.height_override {
        Some(h) => h,
        None => {
            let mut s = noise.stream("height", &root);
            let h = estimate_height(f, params.eps_height, params.eps_tot, params.c0, &mut s)?;
            ledger.charge("height", &root, h, params.eps_height)?;
            h
        }
    };
    let budget = params.budget_for_height(h)?;
    let per_level = budget.prt_per_level(h)?;

    let settings = PartitionSettings {
        eps_per_level: per_level,
        rounds: params.rounds,
    };
    let mut tree = build_partitioning(f, h, settings, noise, &mut ledger)?;

    let credit = match params.partition {
        PartitionBudget::Total(_) => Some(per_level),
        PartitionBudget::PerLevel(_) => None,
    };
    let leaves = perturb_and_prune(
        &mut tree,
        PerturbSettings {
            eps_data: budget.eps_data,
            h,
            stop_count: params.stop_count,
            stop_cells: params.stop_cells,
            unexecuted_split_credit: credit,
        },
        noise,
        &mut ledger,
    )?;
    ledger.assert_valid(params.eps_tot)?;

    let histogram =
        PrivateHistogram::new(f.rows(), f.cols(), params.eps_tot, leaves)?.with_budget(budget);
    Ok(Release {
        histogram,
        ledger,
        height: Some(h),
        tree: Some(tree),
    })
}
