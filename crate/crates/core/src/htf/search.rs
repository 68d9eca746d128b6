//! Budget-bounded split search: a noisy quartering search over candidate
//! split indices that evaluates the objective at most `2T + 1` times.

use std::collections::BTreeMap;

use super::objective::{argmin_first, split_objective, SplitChoice, OBJECTIVE_SENSITIVITY};
use crate::error::{Error, Result};
use crate::grid::{Axis, FrequencyMatrix, Region};
use crate::privacy::NoiseStream;

/// Nearest not-yet-evaluated candidate in `1..extent`, lower side first on ties.
fn nearest_free(target: usize, evaluated: &BTreeMap<usize, f64>, extent: usize) -> usize {
    let free = |k: usize| k >= 1 && k < extent && !evaluated.contains_key(&k);
    for d in 0..extent {
        if target >= d && free(target - d) {
            return target - d;
        }
        if free(target + d) {
            return target + d;
        }
    }
    unreachable!("caller guarantees an unevaluated candidate exists")
}

/// Near-optimal private split index along `axis`.
///
/// Each round probes the midpoints of the two halves around the current
/// centre and recentres on the noisy minimum, narrowing the interval to the
/// neighbouring probes. When a probe position collides with an evaluated
/// candidate (small intervals), the nearest free candidate is used instead so
/// every round spends exactly two evaluations. If there are no more than
/// `2T + 1` candidates in total, all of them are evaluated instead.
pub fn get_split_point(
    f: &FrequencyMatrix,
    region: &Region,
    axis: Axis,
    eps_level: f64,
    rounds: u32,
    noise: &mut NoiseStream,
) -> Result<SplitChoice> {
    let extent = axis.extent(region);
    if extent < 2 {
        return Err(Error::NoSplit {
            axis: axis.name(),
            extent,
        });
    }
    if rounds == 0 {
        return Err(Error::invalid("split search needs at least one round"));
    }
    if !(eps_level > 0.0) {
        return Err(Error::invalid(format!(
            "per-level budget must be positive, got {eps_level}"
        )));
    }
    let candidates = extent - 1;
    let slots = 2 * rounds as usize + 1;

    if candidates <= slots {
        let eps = eps_level / candidates as f64;
        let mut noisy = Vec::with_capacity(candidates);
        for k in 1..extent {
            noisy.push(
                split_objective(f, region, k, axis)? + noise.laplace(OBJECTIVE_SENSITIVITY, eps)?,
            );
        }
        return Ok(SplitChoice {
            index: argmin_first(&noisy) + 1,
            evaluations: candidates,
            eps_per_eval: eps,
        });
    }

    let eps = eps_level / slots as f64;
    let mut evaluated = BTreeMap::new();
    let mut eval = |k: usize, evaluated: &mut BTreeMap<usize, f64>| -> Result<()> {
        let v = split_objective(f, region, k, axis)? + noise.laplace(OBJECTIVE_SENSITIVITY, eps)?;
        evaluated.insert(k, v);
        Ok(())
    };

    // `lo` and `hi` are interval boundaries; 0 and `extent` are not candidates.
    let (mut lo, mut hi) = (0usize, extent);
    let mut k = lo + (hi - lo) / 2;
    eval(k, &mut evaluated)?;
    for _ in 0..rounds {
        let k1 = nearest_free(lo + (k - lo) / 2, &evaluated, extent);
        eval(k1, &mut evaluated)?;
        let k2 = nearest_free(k + (hi - k) / 2, &evaluated, extent);
        eval(k2, &mut evaluated)?;

        let mut best = k;
        for c in [k1, k2] {
            let (vc, vb) = (evaluated[&c], evaluated[&best]);
            if vc < vb || (vc == vb && c < best) {
                best = c;
            }
        }
        let probes = [0, extent, lo, hi, k, k1, k2];
        lo = probes
            .iter()
            .copied()
            .filter(|&p| p < best)
            .max()
            .unwrap_or(0);
        hi = probes
            .iter()
            .copied()
            .filter(|&p| p > best)
            .min()
            .unwrap_or(extent);
        k = best;
    }
    debug_assert_eq!(evaluated.len(), slots);
    Ok(SplitChoice {
        index: k,
        evaluations: slots,
        eps_per_eval: eps,
    })
}
