//! Comparison mechanisms: regular grids, adaptive grids, quadtrees,
//! private kd-trees, per-cell noise and a single flat count.

mod adaptive;
mod consistency;
mod kdtree;
mod quadtree;
mod regular;

pub use adaptive::{build_adaptive_grid, AdaptiveGridParams};
pub use consistency::{enforce_hierarchical_consistency, CountNode, CountTree};
pub use kdtree::{build_kdtree, KdTreeParams};
pub use quadtree::{build_quadtree, max_quadtree_height, QuadTreeParams};
pub use regular::{
    build_flat_uniform, build_regular_grid, build_singular, build_uniform_grid, uniform_grid_size,
};

use crate::error::{Error, Result};
use crate::grid::{FrequencyMatrix, Region};
use crate::histogram::{Leaf, PrivateHistogram};
use crate::htf::{height_from_count, max_height};
use crate::privacy::{geometric_level_budget_with_fanout, BudgetLedger, NodePath, NoiseSource};

/// How a tree's count budget is spread over its levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LevelAlloc {
    Uniform,
    /// More budget towards the leaves, ratio `fanout^(1/3)` per level.
    #[default]
    Geometric,
}

impl LevelAlloc {
    /// Budget for level `height` of a tree of nominal height `h`.
    pub fn level_budget(self, height: u32, h: u32, eps: f64, fanout: f64) -> Result<f64> {
        match self {
            LevelAlloc::Uniform => Ok(eps / (h + 1) as f64),
            LevelAlloc::Geometric => geometric_level_budget_with_fanout(height, h, eps, fanout),
        }
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "eps_tot must be positive and finite, got {eps}"
        )))
    }
}

/// `m` near-equal bins over `n` cells (`m` clamped to `[1, n]`), as `m + 1` edges.
pub(crate) fn bin_edges(n: usize, m: usize) -> Vec<usize> {
    let m = m.clamp(1, n);
    (0..=m).map(|i| i * n / m).collect()
}

/// Height from the data-size rule used for HTF, with the true record count.
pub(crate) fn default_tree_height(f: &FrequencyMatrix, eps: f64, c0: f64) -> u32 {
    height_from_count(f.total() as f64, eps, c0, max_height(f.rows(), f.cols()))
}

/// Tree skeleton shared by the hierarchical baselines, in breadth-first order.
pub(crate) struct Skeleton {
    pub regions: Vec<Region>,
    pub children: Vec<Vec<usize>>,
    pub heights: Vec<u32>,
    pub paths: Vec<NodePath>,
}

impl Skeleton {
    pub fn root(region: Region, h: u32) -> Self {
        Self {
            regions: vec![region],
            children: vec![Vec::new()],
            heights: vec![h],
            paths: vec![NodePath::root()],
        }
    }

    pub fn push_child(&mut self, parent: usize, region: Region) -> usize {
        let idx = self.regions.len();
        let n = self.children[parent].len() as u32;
        self.regions.push(region);
        self.children.push(Vec::new());
        self.heights.push(self.heights[parent] - 1);
        self.paths.push(self.paths[parent].child(n));
        self.children[parent].push(idx);
        idx
    }
}

/// Noisy counts for every node, optional smoothing, leaves released.
///
/// Internal nodes spend their level's share; a leaf spends the shares of its
/// own level and every level below it, so leaves that stopped early do not
/// leave budget unused on their path.
#[allow(clippy::too_many_arguments)]
pub(crate) fn release_skeleton(
    f: &FrequencyMatrix,
    sk: Skeleton,
    eps_counts: f64,
    alloc: LevelAlloc,
    fanout: f64,
    smooth: bool,
    noise: &NoiseSource,
    ledger: &mut BudgetLedger,
) -> Result<Vec<Leaf>> {
    let h = sk.heights[0];
    let levels = (0..=h)
        .map(|i| alloc.level_budget(i, h, eps_counts, fanout))
        .collect::<Result<Vec<f64>>>()?;
    let mut nodes = Vec::with_capacity(sk.regions.len());
    for i in 0..sk.regions.len() {
        let height = sk.heights[i];
        let eps = if sk.children[i].is_empty() {
            levels[..=height as usize].iter().sum()
        } else {
            levels[height as usize]
        };
        ledger.charge("count", &sk.paths[i], height, eps)?;
        let noisy = f.sum_unchecked(&sk.regions[i]) as f64
            + noise.stream("count", &sk.paths[i]).laplace(1.0, eps)?;
        nodes.push(CountNode {
            region: sk.regions[i],
            noisy,
            variance: 2.0 / (eps * eps),
            children: sk.children[i].clone(),
        });
    }
    let mut tree = CountTree::new(nodes)?;
    if smooth {
        match enforce_hierarchical_consistency(&mut tree) {
            Ok(()) => {}
            Err(Error::Unsupported(msg)) => ledger.warn(format!("smoothing skipped: {msg}")),
            Err(e) => return Err(e),
        }
    }
    Ok(tree
        .leaves()
        .map(|n| Leaf {
            region: n.region,
            ncount: n.noisy,
        })
        .collect())
}

pub(crate) fn histogram(
    f: &FrequencyMatrix,
    eps: f64,
    leaves: Vec<Leaf>,
) -> Result<PrivateHistogram> {
    PrivateHistogram::new(f.rows(), f.cols(), eps, leaves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_cover_axis() {
        assert_eq!(bin_edges(10, 3), vec![0, 3, 6, 10]);
        assert_eq!(bin_edges(4, 9), vec![0, 1, 2, 3, 4]);
        assert_eq!(bin_edges(5, 0), vec![0, 5]);
    }

    #[test]
    fn uniform_levels_split_evenly() {
        for i in 0..=4 {
            let e = LevelAlloc::Uniform.level_budget(i, 4, 0.5, 4.0).unwrap();
            assert!((e - 0.1).abs() < 1e-15);
        }
        let g: f64 = (0..=4)
            .map(|i| LevelAlloc::Geometric.level_budget(i, 4, 0.5, 4.0).unwrap())
            .sum();
        assert!((g - 0.5).abs() < 1e-12);
    }
}
