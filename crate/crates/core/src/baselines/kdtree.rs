use super::{check_eps, default_tree_height, histogram, release_skeleton, LevelAlloc, Skeleton};
use crate::error::{Error, Result};
use crate::grid::{Axis, FrequencyMatrix, Region};
use crate::htf::{max_height, DEFAULT_C0};
use crate::mechanism::Release;
use crate::privacy::{BudgetLedger, NoiseSource};

/// Sensitivity of the rank-distance utility.
const MEDIAN_UTILITY_SENSITIVITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdTreeParams {
    /// `None` uses the HTF data-size height.
    pub height: Option<u32>,
    /// Share of the budget spent choosing split points.
    pub structure_fraction: f64,
    pub alloc: LevelAlloc,
    pub smooth: bool,
}

impl Default for KdTreeParams {
    fn default() -> Self {
        Self {
            height: None,
            structure_fraction: 0.15,
            alloc: LevelAlloc::Geometric,
            smooth: true,
        }
    }
}

/// Utilities `-|rank(k) - n/2|` of every split index `k` in `1..extent`,
/// where `rank(k)` counts the records on the low side of the cut.
pub fn median_utilities(f: &FrequencyMatrix, region: &Region, axis: Axis) -> Vec<f64> {
    let half = f.sum_unchecked(region) as f64 / 2.0;
    (1..axis.extent(region))
        .map(|k| {
            let low = axis.split(region, k).0;
            -(f.sum_unchecked(&low) as f64 - half).abs()
        })
        .collect()
}

/// Private kd-tree: alternating-axis binary splits at noisy medians chosen
/// by the exponential mechanism, then noisy counts for every node.
pub fn build_kdtree(
    f: &FrequencyMatrix,
    eps: f64,
    params: KdTreeParams,
    noise: &NoiseSource,
) -> Result<Release> {
    check_eps(eps)?;
    let frac = params.structure_fraction;
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::Config(format!(
            "structure fraction must lie in (0, 1), got {frac}"
        )));
    }
    let limit = max_height(f.rows(), f.cols());
    let h = match params.height {
        Some(0) => return Err(Error::Config("kd-tree height must be at least 1".into())),
        Some(h) => h.min(limit),
        None => default_tree_height(f, eps, DEFAULT_C0),
    };
    let eps_split = frac * eps / h as f64;

    let mut ledger = BudgetLedger::new();
    let mut sk = Skeleton::root(f.domain(), h);
    let mut i = 0;
    while i < sk.regions.len() {
        let (region, height) = (sk.regions[i], sk.heights[i]);
        i += 1;
        if height == 0 {
            continue;
        }
        let preferred = Axis::for_height(height);
        let Some(axis) = [preferred, preferred.other()]
            .into_iter()
            .find(|a| a.extent(&region) >= 2)
        else {
            continue;
        };
        let path = sk.paths[i - 1].clone();
        let utilities = median_utilities(f, &region, axis);
        let pick = noise.stream("median", &path).exponential_select(
            &utilities,
            eps_split,
            MEDIAN_UTILITY_SENSITIVITY,
        )?;
        ledger.charge("median", &path, height, eps_split)?;
        let (a, b) = axis.split(&region, pick + 1);
        sk.push_child(i - 1, a);
        sk.push_child(i - 1, b);
    }
    let leaves = release_skeleton(
        f,
        sk,
        (1.0 - frac) * eps,
        params.alloc,
        2.0,
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
