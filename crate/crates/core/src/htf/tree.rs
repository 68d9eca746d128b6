//! Private space partitioning: recursive binary splits with alternating axes.

use super::search::get_split_point;
use crate::error::Result;
use crate::grid::{Axis, FrequencyMatrix, Region};
use crate::privacy::{BudgetLedger, NodePath, NoiseSource};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub region: Region,
    pub height: u32,
    /// True record count. Never part of a release.
    pub count: u64,
    /// Noisy count, set by the perturbation pass.
    pub ncount: Option<f64>,
    pub children: Option<Box<[TreeNode; 2]>>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            match &n.children {
                None => out.push(n),
                Some(c) => {
                    stack.push(&c[1]);
                    stack.push(&c[0]);
                }
            }
        }
        out
    }

    /// Edges on the longest downward path; 0 for a leaf.
    pub fn depth(&self) -> u32 {
        self.children
            .as_ref()
            .map_or(0, |c| 1 + c[0].depth().max(c[1].depth()))
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .as_ref()
            .map_or(0, |c| c[0].node_count() + c[1].node_count())
    }
}

/// Settings consumed by [`build_partitioning`].
#[derive(Debug, Clone, Copy)]
pub struct PartitionSettings {
    /// Partitioning budget spent by every split (one per level on each path).
    pub eps_per_level: f64,
    /// Search rounds `T` for the split estimator.
    pub rounds: u32,
}

/// Builds the partition tree top-down from the full domain at height `h`.
///
/// The split axis at height `t` is [`Axis::for_height`]; if the region is a
/// single line along that axis the other axis is tried, and a single cell
/// becomes a leaf early. Each split charges `eps_per_level` to the ledger at
/// the node's path, one entry per objective evaluation.
pub fn build_partitioning(
    f: &FrequencyMatrix,
    h: u32,
    settings: PartitionSettings,
    noise: &NoiseSource,
    ledger: &mut BudgetLedger,
) -> Result<TreeNode> {
    build_node(f, f.domain(), h, &NodePath::root(), settings, noise, ledger)
}

fn build_node(
    f: &FrequencyMatrix,
    region: Region,
    height: u32,
    path: &NodePath,
    settings: PartitionSettings,
    noise: &NoiseSource,
    ledger: &mut BudgetLedger,
) -> Result<TreeNode> {
    let mut node = TreeNode {
        region,
        height,
        count: f.sum_unchecked(&region),
        ncount: None,
        children: None,
    };
    if height == 0 {
        return Ok(node);
    }
    let preferred = Axis::for_height(height);
    let Some(axis) = [preferred, preferred.other()]
        .into_iter()
        .find(|a| a.extent(&region) >= 2)
    else {
        return Ok(node);
    };

    let mut stream = noise.stream("split", path);
    let choice = get_split_point(
        f,
        &region,
        axis,
        settings.eps_per_level,
        settings.rounds,
        &mut stream,
    )?;
    for _ in 0..choice.evaluations {
        ledger.charge("split", path, height, choice.eps_per_eval)?;
    }
    let (a, b) = axis.split(&region, choice.index);
    let left = build_node(f, a, height - 1, &path.child(0), settings, noise, ledger)?;
    let right = build_node(f, b, height - 1, &path.child(1), settings, noise, ledger)?;
    node.children = Some(Box::new([left, right]));
    Ok(node)
}
