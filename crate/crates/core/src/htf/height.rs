//! Tree height from a noisy record count.

use crate::error::{Error, Result};
use crate::grid::FrequencyMatrix;
use crate::privacy::NoiseStream;

/// Granularity constant in the height rule `log2(|D| * eps / c0)`.
pub const DEFAULT_C0: f64 = 10.0;

fn ceil_log2(n: usize) -> u32 {
    n.next_power_of_two().trailing_zeros()
}

/// Deepest useful height: enough balanced binary splits to reach single cells.
pub fn max_height(rows: usize, cols: usize) -> u32 {
    (ceil_log2(rows) + ceil_log2(cols)).max(1)
}

/// `floor(log2(max(count, 1) * eps_tot / c0))`, clamped to `[1, max_h]`.
pub fn height_from_count(noisy_count: f64, eps_tot: f64, c0: f64, max_h: u32) -> u32 {
    let v = (noisy_count.max(1.0) * eps_tot / c0).log2().floor();
    if v.is_nan() || v < 1.0 {
        1
    } else {
        (v as u32).min(max_h.max(1))
    }
}

/// Perturbs `|D|` with `Laplace(1 / eps_height)` and applies [`height_from_count`].
pub fn estimate_height(
    f: &FrequencyMatrix,
    eps_height: f64,
    eps_tot: f64,
    c0: f64,
    noise: &mut NoiseStream,
) -> Result<u32> {
    if !(c0 > 0.0) {
        return Err(Error::invalid(format!("c0 must be positive, got {c0}")));
    }
    let noisy = f.total() as f64 + noise.laplace(1.0, eps_height)?;
    Ok(height_from_count(
        noisy,
        eps_tot,
        c0,
        max_height(f.rows(), f.cols()),
    ))
}
