//! Parameter sweeps: every method at every budget, evaluated on workloads of
//! several query sizes, repeated over seeds.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::FrequencyMatrix;
use crate::histogram::format_sig12;
use crate::mechanism::Mechanism;
use crate::privacy::NoiseSource;
use crate::queries::{
    evaluate, generate_workload, QueryShape, QuerySize, RangeQuery, WorkloadSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMethod {
    pub label: String,
    /// Template; its budget is replaced by each swept value.
    pub mechanism: Mechanism,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub methods: Vec<SweepMethod>,
    pub eps: Vec<f64>,
    pub sizes: Vec<QuerySize>,
    pub shape: QueryShape,
    pub queries: usize,
    pub seeds: Vec<u64>,
    pub smoothing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    pub eps: f64,
    pub size: QuerySize,
    pub seed: u64,
    /// MRE and released leaf count, or the error that stopped this row.
    pub outcome: std::result::Result<(f64, usize), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub eps: f64,
    pub size: QuerySize,
    pub median_mre: f64,
    pub runs: usize,
}

/// Seed of the workload for one query size; shared by all methods and budgets.
fn workload_seed(seed: u64, size: QuerySize) -> u64 {
    NoiseSource::new(seed).derive_seed(&format!("workload/{size}"))
}

fn release_noise(seed: u64, label: &str, eps: f64) -> NoiseSource {
    NoiseSource::new(seed).child(&format!("release/{label}/{eps:e}"))
}

/// Runs the full cartesian product. Releases run in parallel; a failing
/// release is recorded in its rows and the sweep continues. Rows come back
/// ordered by method, budget, size, seed.
pub fn run_sweep(f: &FrequencyMatrix, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.methods.is_empty() || cfg.eps.is_empty() || cfg.sizes.is_empty() || cfg.seeds.is_empty()
    {
        return Err(Error::Config(
            "sweep needs at least one method, budget, size and seed".into(),
        ));
    }
    let mut workloads: Vec<Vec<Vec<RangeQuery>>> = Vec::new();
    for &size in &cfg.sizes {
        let mut per_seed = Vec::new();
        for &seed in &cfg.seeds {
            let spec = WorkloadSpec {
                count: cfg.queries,
                size,
                shape: cfg.shape,
                seed: workload_seed(seed, size),
            };
            per_seed.push(generate_workload(&spec, f.rows(), f.cols())?);
        }
        workloads.push(per_seed);
    }

    let jobs: Vec<(usize, usize, usize)> = (0..cfg.methods.len())
        .flat_map(|m| {
            (0..cfg.eps.len()).flat_map(move |e| (0..cfg.seeds.len()).map(move |s| (m, e, s)))
        })
        .collect();
    let results: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(m, e, s)| {
            let method = &cfg.methods[m];
            let (eps, seed) = (cfg.eps[e], cfg.seeds[s]);
            let release = method
                .mechanism
                .with_eps_tot(eps)
                .release(f, &release_noise(seed, &method.label, eps));
            cfg.sizes
                .iter()
                .enumerate()
                .map(|(z, &size)| {
                    let outcome = match &release {
                        Ok(r) => evaluate(&r.histogram, f, &workloads[z][s], cfg.smoothing)
                            .map(|rep| (rep.mre, r.histogram.leaves().len()))
                            .map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    SweepRow {
                        method: method.label.clone(),
                        eps,
                        size,
                        seed,
                        outcome,
                    }
                })
                .collect()
        })
        .collect();

    // jobs are (method, eps, seed); reorder to (method, eps, size, seed)
    let mut rows = Vec::with_capacity(jobs.len() * cfg.sizes.len());
    let per_eps = cfg.seeds.len();
    for m in 0..cfg.methods.len() {
        for e in 0..cfg.eps.len() {
            let base = (m * cfg.eps.len() + e) * per_eps;
            let block = &results[base..base + per_eps];
            for z in 0..cfg.sizes.len() {
                rows.extend(block.iter().map(|per_size| per_size[z].clone()));
            }
        }
    }
    Ok(rows)
}

/// Median of the values (mean of the middle pair for even counts).
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Cross-seed median MRE for every (method, budget, size), skipping failed rows.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut groups: Vec<((String, f64, QuerySize), Vec<f64>)> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.eps, r.size);
        let slot = match groups.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                groups.push((key, Vec::new()));
                groups.len() - 1
            }
        };
        if let Ok((mre, _)) = r.outcome {
            groups[slot].1.push(mre);
        }
    }
    for ((method, eps, size), mut v) in groups {
        if let Some(m) = median(&mut v) {
            out.push(SummaryRow {
                method,
                eps,
                size,
                median_mre: m,
                runs: v.len(),
            });
        }
    }
    out
}

/// `method,eps,size,seed,mre,leaves,error`, one line per row.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "method,eps,size,seed,mre,leaves,error")?;
    for r in rows {
        let (mre, leaves, err) = match &r.outcome {
            Ok((mre, n)) => (format_sig12(*mre), n.to_string(), String::new()),
            Err(e) => (String::new(), String::new(), e.replace([',', '\n'], ";")),
        };
        writeln!(
            w,
            "{},{},{},{},{mre},{leaves},{err}",
            r.method,
            format_sig12(r.eps),
            r.size,
            r.seed
        )?;
    }
    Ok(())
}

/// `method,eps,size,median_mre,runs`.
pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(w, "method,eps,size,median_mre,runs")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.method,
            format_sig12(r.eps),
            r.size,
            format_sig12(r.median_mre),
            r.runs
        )?;
    }
    Ok(())
}
