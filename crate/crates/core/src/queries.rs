//! Range-count queries over released histograms and relative-error evaluation.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{FrequencyMatrix, Region};
use crate::histogram::{format_sig12, PrivateHistogram};

/// Default denominator floor for relative errors.
pub const DEFAULT_SMOOTHING: f64 = 20.0;

/// A cell-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeQuery {
    pub region: Region,
}

impl RangeQuery {
    pub fn new(region: Region) -> Self {
        Self { region }
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if self.region.fits(rows, cols) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "query {} outside {rows}x{cols} domain",
                self.region
            )))
        }
    }
}

/// Answer under the uniformity assumption: each leaf contributes its noisy
/// count times the fraction of its cells covered by the query.
pub fn answer_query(hist: &PrivateHistogram, q: &RangeQuery) -> Result<f64> {
    q.check(hist.rows(), hist.cols())?;
    Ok(hist
        .leaves()
        .iter()
        .map(|l| {
            let overlap = l.region.overlap_cells(&q.region);
            if overlap == 0 {
                0.0
            } else {
                l.ncount * overlap as f64 / l.region.cells() as f64
            }
        })
        .sum())
}

pub fn true_count(f: &FrequencyMatrix, q: &RangeQuery) -> Result<u64> {
    f.subgrid_sum(&q.region)
}

/// `|c - c_hat| / max(c, smoothing)`, as a percentage.
pub fn relative_error(c: u64, c_hat: f64, smoothing: f64) -> f64 {
    (c as f64 - c_hat).abs() / (c as f64).max(smoothing) * 100.0
}

/// Per-cell densities with 2D prefix sums, for answering many queries on
/// one histogram in constant time each.
#[derive(Debug, Clone)]
pub struct HistogramIndex {
    rows: usize,
    cols: usize,
    prefix: Vec<f64>,
}

impl HistogramIndex {
    pub fn new(hist: &PrivateHistogram) -> Self {
        let (rows, cols) = (hist.rows(), hist.cols());
        let mut density = vec![0.0; rows * cols];
        for l in hist.leaves() {
            let d = l.ncount / l.region.cells() as f64;
            for i in l.region.row_lo..l.region.row_hi {
                density[i * cols + l.region.col_lo..i * cols + l.region.col_hi].fill(d);
            }
        }
        let w = cols + 1;
        let mut prefix = vec![0.0; (rows + 1) * w];
        for i in 0..rows {
            let mut run = 0.0;
            for j in 0..cols {
                run += density[i * cols + j];
                prefix[(i + 1) * w + j + 1] = prefix[i * w + j + 1] + run;
            }
        }
        Self { rows, cols, prefix }
    }

    pub fn answer(&self, q: &RangeQuery) -> Result<f64> {
        q.check(self.rows, self.cols)?;
        let w = self.cols + 1;
        let r = &q.region;
        let p = |i: usize, j: usize| self.prefix[i * w + j];
        Ok(
            p(r.row_hi, r.col_hi) - p(r.row_lo, r.col_hi) - p(r.row_hi, r.col_lo)
                + p(r.row_lo, r.col_lo),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuerySize {
    /// Width and height drawn independently, uniform over `[1, dimension]`.
    Random,
    /// Fixed fraction of the domain area, in `(0, 1]`.
    Fraction(f64),
}

impl fmt::Display for QuerySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuerySize::Random => f.write_str("random"),
            QuerySize::Fraction(p) => write!(f, "{}%", format_sig12(p * 100.0)),
        }
    }
}

impl std::str::FromStr for QuerySize {
    type Err = Error;

    /// `random`, a percentage such as `2%`, or a fraction such as `0.02`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("random") {
            return Ok(QuerySize::Random);
        }
        let p = match s.strip_suffix('%') {
            Some(pct) => pct.trim().parse::<f64>().map(|v| v / 100.0),
            None => s.parse::<f64>(),
        }
        .map_err(|_| Error::Config(format!("bad query size {s:?}")))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!(
                "query size must be in (0, 100%], got {s}"
            )));
        }
        Ok(QuerySize::Fraction(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryShape {
    RandomRect,
    Square,
}

impl std::str::FromStr for QueryShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rect" | "random-rect" | "random" => Ok(QueryShape::RandomRect),
            "square" => Ok(QueryShape::Square),
            other => Err(Error::Config(format!("unknown query shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    pub count: usize,
    pub size: QuerySize,
    pub shape: QueryShape,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            count: 2000,
            size: QuerySize::Random,
            shape: QueryShape::RandomRect,
            seed: 0,
        }
    }
}

/// Query extent `(height, width)` covering a fraction `p` of the domain.
///
/// Squares have side `round(sqrt(p*N*M))`; a side longer than the domain is
/// clipped and the other side stretched to keep the area. Random rectangles
/// draw the width uniformly among values that keep the area reachable and
/// derive the height from it.
fn fraction_extent(
    rng: &mut ChaCha20Rng,
    p: f64,
    shape: QueryShape,
    rows: usize,
    cols: usize,
) -> (usize, usize) {
    let area = p * (rows * cols) as f64;
    match shape {
        QueryShape::Square => {
            let side = (area.sqrt().round() as usize).max(1);
            if side > cols {
                (((area / cols as f64).round() as usize).clamp(1, rows), cols)
            } else if side > rows {
                (rows, ((area / rows as f64).round() as usize).clamp(1, cols))
            } else {
                (side, side)
            }
        }
        QueryShape::RandomRect => {
            let w_lo = ((area / rows as f64).ceil() as usize).clamp(1, cols);
            let w_hi = (area.floor() as usize).clamp(w_lo, cols);
            let w = rng.random_range(w_lo..=w_hi);
            let h = ((area / w as f64).round() as usize).clamp(1, rows);
            (h, w)
        }
    }
}

/// Reproducible query workload on a `rows x cols` grid. Positions are
/// uniform over all placements that keep the query inside the domain.
pub fn generate_workload(spec: &WorkloadSpec, rows: usize, cols: usize) -> Result<Vec<RangeQuery>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("empty domain"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let (h, w) = match spec.size {
            QuerySize::Random => (rng.random_range(1..=rows), rng.random_range(1..=cols)),
            QuerySize::Fraction(p) => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Config(format!(
                        "query fraction must be in (0, 1], got {p}"
                    )));
                }
                fraction_extent(&mut rng, p, spec.shape, rows, cols)
            }
        };
        let r0 = rng.random_range(0..=rows - h);
        let c0 = rng.random_range(0..=cols - w);
        out.push(RangeQuery::new(Region::new(r0, r0 + h, c0, c0 + w)?));
    }
    Ok(out)
}

/// One query per line, `row_lo row_hi col_lo col_hi`.
pub fn write_workload<W: Write>(mut w: W, queries: &[RangeQuery]) -> Result<()> {
    for q in queries {
        writeln!(w, "{}", q.region)?;
    }
    Ok(())
}

pub fn read_workload<R: BufRead>(r: R) -> Result<Vec<RangeQuery>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v = body
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        if v.len() != 4 {
            return Err(Error::parse(
                idx + 1,
                "expected `row_lo row_hi col_lo col_hi`",
            ));
        }
        let region = Region::new(v[0], v[1], v[2], v[3])
            .map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        out.push(RangeQuery::new(region));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryResult {
    pub true_count: u64,
    pub answer: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub results: Vec<QueryResult>,
    pub mre: f64,
    pub smoothing: f64,
}

impl EvalReport {
    /// `query_id,true,answer,rel_err` rows followed by a `#` summary line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "query_id,true,answer,rel_err")?;
        for (i, r) in self.results.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{}",
                r.true_count,
                format_sig12(r.answer),
                format_sig12(r.rel_err)
            )?;
        }
        writeln!(
            w,
            "# summary: queries={} smoothing={} mre={}",
            self.results.len(),
            format_sig12(self.smoothing),
            format_sig12(self.mre)
        )?;
        Ok(())
    }
}

/// Relative error of every query and their mean. Queries are answered in
/// parallel; results keep workload order.
pub fn evaluate(
    hist: &PrivateHistogram,
    f: &FrequencyMatrix,
    workload: &[RangeQuery],
    smoothing: f64,
) -> Result<EvalReport> {
    if !(smoothing > 0.0) {
        return Err(Error::Config(format!(
            "smoothing must be positive, got {smoothing}"
        )));
    }
    if (hist.rows(), hist.cols()) != (f.rows(), f.cols()) {
        return Err(Error::invalid(format!(
            "histogram is {}x{} but data is {}x{}",
            hist.rows(),
            hist.cols(),
            f.rows(),
            f.cols()
        )));
    }
    let index = HistogramIndex::new(hist);
    let results = workload
        .par_iter()
        .map(|q| {
            let c = true_count(f, q)?;
            let a = index.answer(q)?;
            Ok(QueryResult {
                true_count: c,
                answer: a,
                rel_err: relative_error(c, a, smoothing),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mre = if results.is_empty() {
        0.0
    } else {
        results.iter().map(|r| r.rel_err).sum::<f64>() / results.len() as f64
    };
    Ok(EvalReport {
        results,
        mre,
        smoothing,
    })
}
