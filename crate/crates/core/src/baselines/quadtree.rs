use super::{check_eps, default_tree_height, histogram, release_skeleton, LevelAlloc, Skeleton};
use crate::error::{Error, Result};
use crate::grid::{FrequencyMatrix, Region};
use crate::htf::DEFAULT_C0;
use crate::mechanism::Release;
use crate::privacy::{BudgetLedger, NoiseSource};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTreeParams {
    /// Levels below the root. `None` uses half the HTF data-size height.
    pub height: Option<u32>,
    pub alloc: LevelAlloc,
    pub smooth: bool,
}

impl Default for QuadTreeParams {
    fn default() -> Self {
        Self {
            height: None,
            alloc: LevelAlloc::Geometric,
            smooth: true,
        }
    }
}

/// Deepest complete quadtree whose every node still has at least one cell
/// per quadrant.
pub fn max_quadtree_height(rows: usize, cols: usize) -> u32 {
    rows.min(cols).ilog2()
}

fn quadrants(r: &Region) -> [Region; 4] {
    let (top, bottom) = r.split_rows(r.rows() / 2);
    let (tl, tr) = top.split_cols(r.cols() / 2);
    let (bl, br) = bottom.split_cols(r.cols() / 2);
    [tl, tr, bl, br]
}

/// Full 4-ary tree of equal quadrants; every node gets a noisy count.
pub fn build_quadtree(
    f: &FrequencyMatrix,
    eps: f64,
    params: QuadTreeParams,
    noise: &NoiseSource,
) -> Result<Release> {
    check_eps(eps)?;
    let requested = match params.height {
        Some(0) => return Err(Error::Config("quadtree height must be at least 1".into())),
        Some(h) => h,
        None => default_tree_height(f, eps, DEFAULT_C0).div_ceil(2),
    };
    let h = requested.min(max_quadtree_height(f.rows(), f.cols()));

    let mut sk = Skeleton::root(f.domain(), h);
    let mut i = 0;
    while i < sk.regions.len() {
        if sk.heights[i] > 0 {
            for q in quadrants(&sk.regions[i]) {
                sk.push_child(i, q);
            }
        }
        i += 1;
    }
    let mut ledger = BudgetLedger::new();
    if h < requested {
        ledger.warn(format!("quadtree height clamped from {requested} to {h}"));
    }
    let leaves = release_skeleton(
        f,
        sk,
        eps,
        params.alloc,
        4.0,
        params.smooth,
        noise,
        &mut ledger,
    )?;
    Ok(Release {
        histogram: histogram(f, eps, leaves)?,
        ledger,
        height: Some(h),
        tree: None,
    })
}
