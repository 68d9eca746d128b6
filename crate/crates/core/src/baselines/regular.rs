use super::{bin_edges, check_eps, histogram};
use crate::error::{Error, Result};
use crate::grid::{FrequencyMatrix, Region};
use crate::histogram::Leaf;
use crate::mechanism::Release;
use crate::privacy::{BudgetLedger, NodePath, NoiseSource};

/// Side length `max(1, round(sqrt(n * eps / c0)))` of the uniform grid.
pub fn uniform_grid_size(n: u64, eps: f64, c0: f64) -> usize {
    ((n as f64 * eps / c0).sqrt().round() as usize).max(1)
}

/// `rows x cols` regular partition (each clamped to the grid), one noisy count
/// per region. Regions are disjoint, so every count gets the full budget.
pub fn build_regular_grid(
    f: &FrequencyMatrix,
    rows: usize,
    cols: usize,
    eps: f64,
    noise: &NoiseSource,
) -> Result<Release> {
    check_eps(eps)?;
    let re = bin_edges(f.rows(), rows);
    let ce = bin_edges(f.cols(), cols);
    let mut ledger = BudgetLedger::new();
    ledger.charge("cell", &NodePath::root().any_child(), 0, eps)?;
    let mut s = noise.stream("cell", &NodePath::root());
    let mut leaves = Vec::with_capacity((re.len() - 1) * (ce.len() - 1));
    for r in re.windows(2) {
        for c in ce.windows(2) {
            let region = Region::new(r[0], r[1], c[0], c[1])?;
            leaves.push(Leaf {
                region,
                ncount: f.sum_unchecked(&region) as f64 + s.laplace(1.0, eps)?,
            });
        }
    }
    Ok(Release {
        histogram: histogram(f, eps, leaves)?,
        ledger,
        height: None,
        tree: None,
    })
}

/// Uniform grid whose granularity follows the data size and budget.
pub fn build_uniform_grid(
    f: &FrequencyMatrix,
    eps: f64,
    c0: f64,
    noise: &NoiseSource,
) -> Result<Release> {
    check_eps(eps)?;
    if !(c0 > 0.0) {
        return Err(Error::Config(format!("c0 must be positive, got {c0}")));
    }
    let m = uniform_grid_size(f.total(), eps, c0);
    build_regular_grid(f, m, m, eps, noise)
}

/// Every cell released with its own noisy count.
pub fn build_singular(f: &FrequencyMatrix, eps: f64, noise: &NoiseSource) -> Result<Release> {
    build_regular_grid(f, f.rows(), f.cols(), eps, noise)
}

/// One noisy total for the whole domain.
pub fn build_flat_uniform(f: &FrequencyMatrix, eps: f64, noise: &NoiseSource) -> Result<Release> {
    build_regular_grid(f, 1, 1, eps, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_gaussian;

    #[test]
    fn grid_size_rule() {
        assert_eq!(uniform_grid_size(3_500_000, 0.1, 10.0), 187);
        assert_eq!(uniform_grid_size(0, 0.1, 10.0), 1);
    }

    #[test]
    fn noiseless_grid_is_exact_on_cells() {
        let f = generate_gaussian(2000, 3.0, 12, 12, 1).unwrap();
        let r = build_regular_grid(&f, 4, 4, 0.5, &NoiseSource::noiseless(0)).unwrap();
        assert_eq!(r.histogram.leaves().len(), 16);
        for l in r.histogram.leaves() {
            assert_eq!(l.ncount, f.subgrid_sum(&l.region).unwrap() as f64);
        }
    }

    #[test]
    fn one_by_one_grid_is_flat() {
        let f = generate_gaussian(500, 2.0, 8, 8, 2).unwrap();
        let src = NoiseSource::new(9);
        let a = build_regular_grid(&f, 1, 1, 0.1, &src).unwrap();
        let b = build_flat_uniform(&f, 0.1, &src).unwrap();
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(b.histogram.leaves().len(), 1);
    }

    #[test]
    fn singular_releases_every_cell() {
        let f = FrequencyMatrix::from_counts(1, 1, vec![7]).unwrap();
        let r = build_singular(&f, 1.0, &NoiseSource::new(0)).unwrap();
        assert_eq!(r.histogram.leaves().len(), 1);
        let f = generate_gaussian(100, 2.0, 5, 6, 2).unwrap();
        let r = build_singular(&f, 1.0, &NoiseSource::new(0)).unwrap();
        assert_eq!(r.histogram.leaves().len(), 30);
        assert!(r.ledger.assert_valid(1.0).is_ok());
        assert!((r.ledger.max_path_total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_budget_is_config_error() {
        let f = FrequencyMatrix::zeros(2, 2).unwrap();
        assert!(matches!(
            build_singular(&f, 0.0, &NoiseSource::new(0)),
            Err(Error::Config(_))
        ));
    }
}
