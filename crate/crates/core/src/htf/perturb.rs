//! Noisy counts with geometric per-level budgets and count/extent pruning.

use super::tree::TreeNode;
use crate::error::Result;
use crate::grid::Region;
use crate::histogram::Leaf;
use crate::privacy::{geometric_level_budget, BudgetLedger, NodePath, NoiseSource};

/// Remaining budgets below this fraction of `eps_data` are treated as exhausted.
const REMAIN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct PerturbSettings {
    pub eps_data: f64,
    /// Nominal tree height used by the geometric allocation.
    pub h: u32,
    /// Prune when the noisy count is at or below this value.
    pub stop_count: f64,
    /// Prune when the region has fewer cells than this.
    pub stop_cells: usize,
    /// Per-level partitioning budget credited back to a released leaf for
    /// every level below it where no split ran anywhere in its subtree.
    /// `None` leaves that budget unused.
    pub unexecuted_split_credit: Option<f64>,
}

/// Depth-first perturbation. Every visited node spends its geometric share at
/// its height; a node that meets a stop condition (or was already a leaf above
/// height 0) is re-perturbed with everything left on its path and becomes a
/// released leaf. Nodes reaching height 0 keep their geometric-share count.
///
/// The tree is pruned in place and annotated with the released counts.
pub fn perturb_and_prune(
    root: &mut TreeNode,
    settings: PerturbSettings,
    noise: &NoiseSource,
    ledger: &mut BudgetLedger,
) -> Result<Vec<Leaf>> {
    let mut leaves = Vec::new();
    visit(
        root,
        &NodePath::root(),
        0.0,
        &settings,
        noise,
        ledger,
        &mut leaves,
    )?;
    Ok(leaves)
}

fn visit(
    node: &mut TreeNode,
    path: &NodePath,
    accumulated: f64,
    s: &PerturbSettings,
    noise: &NoiseSource,
    ledger: &mut BudgetLedger,
    out: &mut Vec<Leaf>,
) -> Result<()> {
    let eps_node = geometric_level_budget(node.height, s.h, s.eps_data)?;
    ledger.charge("data", path, node.height, eps_node)?;
    let accumulated = accumulated + eps_node;
    let mut ncount = node.count as f64 + noise.stream("data", path).laplace(1.0, eps_node)?;

    let stop = ncount <= s.stop_count || node.region.cells() < s.stop_cells;
    if !stop && !node.is_leaf() {
        node.ncount = Some(ncount);
        let children = node.children.as_mut().expect("checked above");
        for (i, child) in children.iter_mut().enumerate() {
            visit(
                child,
                &path.child(i as u32),
                accumulated,
                s,
                noise,
                ledger,
                out,
            )?;
        }
        return Ok(());
    }

    if node.height > 0 {
        let mut remain = s.eps_data - accumulated;
        if let Some(per_level) = s.unexecuted_split_credit {
            remain += per_level * (node.height - node.depth()) as f64;
        }
        if remain > REMAIN_FLOOR * s.eps_data {
            ncount = node.count as f64 + noise.stream("remain", path).laplace(1.0, remain)?;
            ledger.charge("remain", path, node.height, remain)?;
        } else {
            ledger.warn(format!(
                "no remaining data budget at {path} (height {}); releasing first noisy count",
                node.height
            ));
        }
    }
    node.children = None;
    node.ncount = Some(ncount);
    out.push(leaf(node.region, ncount));
    Ok(())
}

fn leaf(region: Region, ncount: f64) -> Leaf {
    Leaf { region, ncount }
}
