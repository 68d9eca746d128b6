//! Shared fixtures for the benchmarks under `benches/`.

use htf_core::grid::generate_gaussian;
use htf_core::queries::generate_workload;
use htf_core::{FrequencyMatrix, RangeQuery, WorkloadSpec};

/// Single-cluster Gaussian dataset on a square grid, fixed seed.
pub fn gaussian(side: usize, n: usize, sigma: f64) -> FrequencyMatrix {
    generate_gaussian(n, sigma, side, side, 7).expect("valid fixture parameters")
}

pub fn random_workload(f: &FrequencyMatrix, count: usize) -> Vec<RangeQuery> {
    let spec = WorkloadSpec {
        count,
        seed: 11,
        ..WorkloadSpec::default()
    };
    generate_workload(&spec, f.rows(), f.cols()).expect("non-empty grid")
}
