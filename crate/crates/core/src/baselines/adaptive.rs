use super::{bin_edges, check_eps, histogram};
use crate::error::{Error, Result};
use crate::grid::{FrequencyMatrix, Region};
use crate::histogram::Leaf;
use crate::mechanism::Release;
use crate::privacy::{BudgetLedger, NodePath, NoiseSource};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveGridParams {
    /// Fraction of the budget spent on the first-level grid.
    pub alpha: f64,
    /// Granularity constant; the second level uses `c0 / 2`.
    pub c0: f64,
}

impl Default for AdaptiveGridParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            c0: 10.0,
        }
    }
}

/// Two-level adaptive grid.
///
/// The first level is an `m1 x m1` grid with `m1 = max(10, ceil(sqrt(n*eps/c0)/4))`.
/// Each first-level cell with noisy count `n'` is split again into
/// `m2 x m2` cells, `m2 = ceil(sqrt(n' * (1-alpha) * eps / (c0/2)))`. The two
/// levels are then reconciled so each first-level cell equals the sum of its
/// second-level cells, and the second-level cells are released.
pub fn build_adaptive_grid(
    f: &FrequencyMatrix,
    eps: f64,
    params: AdaptiveGridParams,
    noise: &NoiseSource,
) -> Result<Release> {
    check_eps(eps)?;
    let AdaptiveGridParams { alpha, c0 } = params;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(c0 > 0.0) {
        return Err(Error::Config(format!("c0 must be positive, got {c0}")));
    }
    let (eps1, eps2) = (alpha * eps, (1.0 - alpha) * eps);
    let m1 = (((f.total() as f64 * eps / c0).sqrt() / 4.0).ceil() as usize).max(10);
    let re = bin_edges(f.rows(), m1);
    let ce = bin_edges(f.cols(), m1);

    let mut ledger = BudgetLedger::new();
    let mut leaves = Vec::new();
    let mut idx = 0u32;
    for r in re.windows(2) {
        for c in ce.windows(2) {
            let cell = Region::new(r[0], r[1], c[0], c[1])?;
            let path = NodePath::root().child(idx);
            idx += 1;
            ledger.charge("level1", &path, 1, eps1)?;
            let v =
                f.sum_unchecked(&cell) as f64 + noise.stream("level1", &path).laplace(1.0, eps1)?;

            let m2 = ((v.max(0.0) * eps2 / (c0 / 2.0)).sqrt().ceil() as usize).max(1);
            let r2 = bin_edges(cell.rows(), m2);
            let c2 = bin_edges(cell.cols(), m2);
            ledger.charge("level2", &path.any_child(), 0, eps2)?;
            let mut s = noise.stream("level2", &path);
            let mut sub = Vec::with_capacity((r2.len() - 1) * (c2.len() - 1));
            for a in r2.windows(2) {
                for b in c2.windows(2) {
                    let region = Region::new(
                        cell.row_lo + a[0],
                        cell.row_lo + a[1],
                        cell.col_lo + b[0],
                        cell.col_lo + b[1],
                    )?;
                    let u = f.sum_unchecked(&region) as f64 + s.laplace(1.0, eps2)?;
                    sub.push(Leaf { region, ncount: u });
                }
            }
            // Inverse-variance combination of the level-1 count with the sum
            // of its k level-2 counts, residual spread evenly.
            let k = sub.len() as f64;
            let sum: f64 = sub.iter().map(|l| l.ncount).sum();
            let (w1, w2) = (alpha * alpha * k, (1.0 - alpha) * (1.0 - alpha));
            let merged = (w1 * v + w2 * sum) / (w1 + w2);
            let shift = (merged - sum) / k;
            for l in &mut sub {
                l.ncount += shift;
            }
            leaves.extend(sub);
        }
    }
    Ok(Release {
        histogram: histogram(f, eps, leaves)?,
        ledger,
        height: None,
        tree: None,
    })
}
