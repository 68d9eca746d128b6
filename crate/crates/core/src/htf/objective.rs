//! Homogeneity objective for a binary split and the split selectors built on it.

use crate::error::{Error, Result};
use crate::grid::{Axis, FrequencyMatrix, Region};
use crate::privacy::NoiseStream;

/// Sensitivity of [`split_objective`] to adding or removing one record.
pub const OBJECTIVE_SENSITIVITY: f64 = 2.0;

/// Outcome of a (private or exact) split selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    /// Size of the first cluster along the axis, in `1..extent`.
    pub index: usize,
    /// Number of objective evaluations performed (each one is a charge).
    pub evaluations: usize,
    /// Budget spent on every evaluation.
    pub eps_per_eval: f64,
}

/// `(A, n)` with `A / n` the sum of absolute deviations from the mean over
/// `r`: `A = sum |n * c - S|`, exact in integers.
fn scaled_abs_dev(f: &FrequencyMatrix, r: &Region) -> (u128, u128) {
    let n = r.cells() as i128;
    let total = f.sum_unchecked(r) as i128;
    let mut acc: u128 = 0;
    for i in r.row_lo..r.row_hi {
        for j in r.col_lo..r.col_hi {
            acc += (n * f.get(i, j) as i128 - total).unsigned_abs();
        }
    }
    (acc, n as u128)
}

/// Sum of absolute deviations from each cluster's mean when the first `k`
/// lines of `region` along `axis` form one cluster and the rest the other.
/// `k == extent` means no division (the second cluster is empty and adds 0).
///
/// The value is formed as one exact fraction and rounded once, so equal
/// objectives compare equal.
pub fn split_objective(f: &FrequencyMatrix, region: &Region, k: usize, axis: Axis) -> Result<f64> {
    if !region.fits(f.rows(), f.cols()) {
        return Err(Error::invalid(format!("region {region} outside matrix")));
    }
    let extent = axis.extent(region);
    if k == 0 || k > extent {
        return Err(Error::invalid(format!(
            "split index {k} outside 1..={extent} on {} axis",
            axis.name()
        )));
    }
    if k == extent {
        let (a, n) = scaled_abs_dev(f, region);
        return Ok(a as f64 / n as f64);
    }
    let (first, second) = axis.split(region, k);
    let (a1, n1) = scaled_abs_dev(f, &first);
    let (a2, n2) = scaled_abs_dev(f, &second);
    Ok((a1 * n2 + a2 * n1) as f64 / (n1 * n2) as f64)
}

fn require_splittable(region: &Region, axis: Axis) -> Result<usize> {
    let extent = axis.extent(region);
    if extent < 2 {
        return Err(Error::NoSplit {
            axis: axis.name(),
            extent,
        });
    }
    Ok(extent)
}

/// Index of the smallest value; ties go to the earliest entry.
pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Non-private exact minimizer over `k in 1..extent`. Test oracle only.
pub fn optimal_split_exact(f: &FrequencyMatrix, region: &Region, axis: Axis) -> Result<usize> {
    let extent = require_splittable(region, axis)?;
    let values = (1..extent)
        .map(|k| split_objective(f, region, k, axis))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin_first(&values) + 1)
}

/// Noisy arg-min over every candidate split. The per-level budget is divided
/// evenly over the `extent - 1` evaluations.
pub fn noisy_split_baseline(
    f: &FrequencyMatrix,
    region: &Region,
    axis: Axis,
    eps_level: f64,
    noise: &mut NoiseStream,
) -> Result<SplitChoice> {
    let extent = require_splittable(region, axis)?;
    if !(eps_level > 0.0) {
        return Err(Error::invalid(format!(
            "per-level budget must be positive, got {eps_level}"
        )));
    }
    let evaluations = extent - 1;
    let eps = eps_level / evaluations as f64;
    let mut noisy = Vec::with_capacity(evaluations);
    for k in 1..extent {
        noisy.push(
            split_objective(f, region, k, axis)? + noise.laplace(OBJECTIVE_SENSITIVITY, eps)?,
        );
    }
    Ok(SplitChoice {
        index: argmin_first(&noisy) + 1,
        evaluations,
        eps_per_eval: eps,
    })
}
