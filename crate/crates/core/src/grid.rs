//! Discretized location data: raw points, the frequency matrix, and rectangular
//! regions of cells.
//!
//! Coordinates follow the usual image convention: `x` selects a column and `y`
//! selects a row. A [`FrequencyMatrix`] keeps a 2D prefix-sum table next to the
//! counts so that any rectangular [`Region`] can be summed in constant time.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Resampling attempts for an out-of-domain synthetic point before it is clamped.
pub const MAX_RESAMPLE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
}

impl PointRecord {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::invalid(format!("non-finite point ({x}, {y})")));
        }
        Ok(Self { x, y })
    }
}

/// Axis-aligned domain rectangle in data units. Both upper edges are inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let ok = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite())
            && x_max > x_min
            && y_max > y_min;
        if !ok {
            return Err(Error::invalid(format!(
                "degenerate bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Domain `[0, cols] x [0, rows]`, i.e. one data unit per cell.
    pub fn cell_units(rows: usize, cols: usize) -> Self {
        Self {
            x_min: 0.0,
            y_min: 0.0,
            x_max: cols as f64,
            y_max: rows as f64,
        }
    }

    fn contains(&self, p: &PointRecord) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

/// Half-open rectangle of cells: rows `row_lo..row_hi`, columns `col_lo..col_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub row_lo: usize,
    pub row_hi: usize,
    pub col_lo: usize,
    pub col_hi: usize,
}

impl Region {
    pub fn new(row_lo: usize, row_hi: usize, col_lo: usize, col_hi: usize) -> Result<Self> {
        if row_lo >= row_hi || col_lo >= col_hi {
            return Err(Error::invalid(format!(
                "empty region rows {row_lo}..{row_hi} cols {col_lo}..{col_hi}"
            )));
        }
        Ok(Self {
            row_lo,
            row_hi,
            col_lo,
            col_hi,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            row_lo: 0,
            row_hi: rows,
            col_lo: 0,
            col_hi: cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.row_hi - self.row_lo
    }

    pub fn cols(&self) -> usize {
        self.col_hi - self.col_lo
    }

    pub fn cells(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        self.row_lo < self.row_hi
            && self.col_lo < self.col_hi
            && self.row_hi <= rows
            && self.col_hi <= cols
    }

    pub fn intersect(&self, other: &Region) -> Option<Region> {
        let r = Region {
            row_lo: self.row_lo.max(other.row_lo),
            row_hi: self.row_hi.min(other.row_hi),
            col_lo: self.col_lo.max(other.col_lo),
            col_hi: self.col_hi.min(other.col_hi),
        };
        (r.row_lo < r.row_hi && r.col_lo < r.col_hi).then_some(r)
    }

    pub fn overlap_cells(&self, other: &Region) -> usize {
        self.intersect(other).map_or(0, |r| r.cells())
    }

    /// Top `k` rows and the remainder.
    pub fn split_rows(&self, k: usize) -> (Region, Region) {
        debug_assert!(k >= 1 && k < self.rows());
        let mid = self.row_lo + k;
        (
            Region {
                row_hi: mid,
                ..*self
            },
            Region {
                row_lo: mid,
                ..*self
            },
        )
    }

    /// Left `k` columns and the remainder.
    pub fn split_cols(&self, k: usize) -> (Region, Region) {
        debug_assert!(k >= 1 && k < self.cols());
        let mid = self.col_lo + k;
        (
            Region {
                col_hi: mid,
                ..*self
            },
            Region {
                col_lo: mid,
                ..*self
            },
        )
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.row_lo, self.row_hi, self.col_lo, self.col_hi
        )
    }
}

/// Direction of a binary split. `Cols` cuts between columns (an x-split),
/// `Rows` cuts between rows (a y-split).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Cols,
    Rows,
}

impl Axis {
    /// Axis used at a given tree height: even heights split columns.
    pub fn for_height(height: u32) -> Self {
        if height.is_multiple_of(2) {
            Axis::Cols
        } else {
            Axis::Rows
        }
    }

    pub fn other(self) -> Self {
        match self {
            Axis::Cols => Axis::Rows,
            Axis::Rows => Axis::Cols,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Cols => "x",
            Axis::Rows => "y",
        }
    }

    /// Number of cell lines along this axis (candidate cluster sizes are `1..extent`).
    pub fn extent(self, r: &Region) -> usize {
        match self {
            Axis::Cols => r.cols(),
            Axis::Rows => r.rows(),
        }
    }

    /// Splits off the first `k` lines.
    pub fn split(self, r: &Region, k: usize) -> (Region, Region) {
        match self {
            Axis::Cols => r.split_cols(k),
            Axis::Rows => r.split_rows(k),
        }
    }
}

/// N x M grid of record counts with a prefix-sum table for O(1) rectangle sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyMatrix {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    // (rows + 1) x (cols + 1), prefix[i][j] = sum of counts[..i][..j]
    prefix: Vec<u64>,
}

impl FrequencyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_counts(rows, cols, vec![0; rows * cols])
    }

    /// Builds a matrix from row-major counts.
    pub fn from_counts(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "grid must be non-empty, got {rows}x{cols}"
            )));
        }
        if counts.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} counts for a {rows}x{cols} grid, got {}",
                rows * cols,
                counts.len()
            )));
        }
        let stride = cols + 1;
        let mut prefix = vec![0u64; (rows + 1) * stride];
        for i in 0..rows {
            let mut row_sum = 0u64;
            for j in 0..cols {
                row_sum += counts[i * cols + j];
                prefix[(i + 1) * stride + j + 1] = prefix[i * stride + j + 1] + row_sum;
            }
        }
        Ok(Self {
            rows,
            cols,
            counts,
            prefix,
        })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::from_counts(n, m, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn domain(&self) -> Region {
        Region::full(self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.prefix[self.prefix.len() - 1]
    }

    pub fn occupied_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Sum of counts inside `region`.
    pub fn subgrid_sum(&self, region: &Region) -> Result<u64> {
        if !region.fits(self.rows, self.cols) {
            return Err(Error::invalid(format!(
                "region {region} outside {}x{} grid",
                self.rows, self.cols
            )));
        }
        Ok(self.sum_unchecked(region))
    }

    #[inline]
    pub(crate) fn sum_unchecked(&self, r: &Region) -> u64 {
        let s = self.cols + 1;
        let p = &self.prefix;
        p[r.row_hi * s + r.col_hi] + p[r.row_lo * s + r.col_lo]
            - p[r.row_lo * s + r.col_hi]
            - p[r.row_hi * s + r.col_lo]
    }

    /// Matrix snapshot: `N M total` then N lines of M space-separated counts.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.rows, self.cols, self.total())?;
        let mut line = String::new();
        for row in self.counts.chunks(self.cols) {
            line.clear();
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&c.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(1, "header must be `N M total`"));
        }
        let parse = |s: &str, line| {
            s.parse::<u64>()
                .map_err(|e| Error::parse(line, format!("{s:?}: {e}")))
        };
        let rows = parse(fields[0], 1)? as usize;
        let cols = parse(fields[1], 1)? as usize;
        let total = parse(fields[2], 1)?;
        let mut counts = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            seen += 1;
            let before = counts.len();
            for tok in line.split_whitespace() {
                counts.push(parse(tok, idx + 1)?);
            }
            if counts.len() - before != cols {
                return Err(Error::parse(idx + 1, format!("expected {cols} counts")));
            }
        }
        if seen != rows {
            return Err(Error::parse(
                seen + 1,
                format!("expected {rows} rows, found {seen}"),
            ));
        }
        let m = Self::from_counts(rows, cols, counts)?;
        if m.total() != total {
            return Err(Error::parse(
                1,
                format!("header total {total} != sum of counts {}", m.total()),
            ));
        }
        Ok(m)
    }
}

/// Result of binning raw points: the matrix plus how many points fell outside the bounds.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub matrix: FrequencyMatrix,
    pub rejected: u64,
}

/// Bins points into an `rows x cols` grid over `bounds`. Points on the upper
/// edges land in the last row/column; points outside are tallied and dropped.
pub fn discretize(
    points: &[PointRecord],
    bounds: &Bounds,
    rows: usize,
    cols: usize,
) -> Result<Discretized> {
    let bounds = Bounds::new(bounds.x_min, bounds.y_min, bounds.x_max, bounds.y_max)?;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "grid must be non-empty, got {rows}x{cols}"
        )));
    }
    let mut counts = vec![0u64; rows * cols];
    let width = bounds.x_max - bounds.x_min;
    let height = bounds.y_max - bounds.y_min;
    let mut rejected = 0;
    for p in points {
        if !bounds.contains(p) {
            rejected += 1;
            continue;
        }
        let col = (((p.x - bounds.x_min) / width * cols as f64) as usize).min(cols - 1);
        let row = (((p.y - bounds.y_min) / height * rows as f64) as usize).min(rows - 1);
        counts[row * cols + col] += 1;
    }
    Ok(Discretized {
        matrix: FrequencyMatrix::from_counts(rows, cols, counts)?,
        rejected,
    })
}

/// Draws `n` points from one isotropic Gaussian cluster whose center is uniform
/// over the `[0, cols) x [0, rows)` domain. `sigma` is in cell units.
pub fn gaussian_points(
    n: usize,
    sigma: f64,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<Vec<PointRecord>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "grid must be non-empty, got {rows}x{cols}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (w, h) = (cols as f64, rows as f64);
    let xc = rng.random::<f64>() * w;
    let yc = rng.random::<f64>() * h;
    let nx = Normal::new(xc, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let ny = Normal::new(yc, sigma).map_err(|e| Error::invalid(e.to_string()))?;

    let draw = |rng: &mut ChaCha20Rng, dist: &Normal<f64>, limit: f64| {
        for _ in 0..MAX_RESAMPLE {
            let v = dist.sample(rng);
            if (0.0..limit).contains(&v) {
                return v;
            }
        }
        dist.sample(rng).clamp(0.0, limit.next_down())
    };
    Ok((0..n)
        .map(|_| {
            let x = draw(&mut rng, &nx, w);
            let y = draw(&mut rng, &ny, h);
            PointRecord { x, y }
        })
        .collect())
}

/// Synthetic Gaussian dataset binned on its own cell-unit domain.
pub fn generate_gaussian(
    n: usize,
    sigma: f64,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<FrequencyMatrix> {
    let pts = gaussian_points(n, sigma, rows, cols, seed)?;
    Ok(discretize(&pts, &Bounds::cell_units(rows, cols), rows, cols)?.matrix)
}

/// Reads `x,y` lines; blank lines and `#` comments are skipped.
pub fn read_points<R: BufRead>(r: R) -> Result<Vec<PointRecord>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split(',').map(str::trim);
        let (Some(xs), Some(ys), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(idx + 1, "expected `x,y`"));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::parse(idx + 1, format!("{s:?}: {e}")))
        };
        let p = PointRecord::new(num(xs)?, num(ys)?)
            .map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_points<W: Write>(mut w: W, header: &str, points: &[PointRecord]) -> Result<()> {
    for line in header.lines() {
        writeln!(w, "# {line}")?;
    }
    for p in points {
        writeln!(w, "{},{}", p.x, p.y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 3x3 running example: left two columns hold a zero row over a 2x2
    /// block of 3s, the right column holds 4 above two 1s.
    pub(crate) fn four_block_grid() -> FrequencyMatrix {
        FrequencyMatrix::from_rows(&[vec![4, 0, 0], vec![1, 3, 3], vec![1, 3, 3]]).unwrap()
    }

    #[test]
    fn empty_input_gives_zero_matrix() {
        let d = discretize(&[], &Bounds::cell_units(4, 5), 4, 5).unwrap();
        assert_eq!(d.matrix.total(), 0);
        assert_eq!(d.rejected, 0);
        assert!(d.matrix.counts().iter().all(|&c| c == 0));
    }

    #[test]
    fn four_block_partition_counts() {
        let mut pts = Vec::new();
        let f = four_block_grid();
        for i in 0..3 {
            for j in 0..3 {
                for _ in 0..f.get(i, j) {
                    pts.push(PointRecord::new(j as f64 + 0.5, i as f64 + 0.5).unwrap());
                }
            }
        }
        let m = discretize(&pts, &Bounds::cell_units(3, 3), 3, 3)
            .unwrap()
            .matrix;
        assert_eq!(m, f);
        let parts = [
            Region::new(0, 1, 1, 3).unwrap(),
            Region::new(1, 3, 1, 3).unwrap(),
            Region::new(0, 1, 0, 1).unwrap(),
            Region::new(1, 3, 0, 1).unwrap(),
        ];
        let sums: Vec<u64> = parts.iter().map(|r| m.subgrid_sum(r).unwrap()).collect();
        assert_eq!(sums, vec![0, 12, 4, 2]);
    }

    #[test]
    fn right_columns_sum_to_twelve() {
        let f = four_block_grid();
        assert_eq!(
            f.subgrid_sum(&Region::new(0, 3, 1, 3).unwrap()).unwrap(),
            12
        );
        assert_eq!(f.subgrid_sum(&f.domain()).unwrap(), f.total());
    }

    #[test]
    fn out_of_bounds_points_are_rejected() {
        let pts = [
            PointRecord::new(-0.1, 0.5).unwrap(),
            PointRecord::new(0.5, 0.5).unwrap(),
            PointRecord::new(2.0, 2.0).unwrap(), // upper edge is inclusive
            PointRecord::new(2.0, 2.01).unwrap(),
        ];
        let d = discretize(&pts, &Bounds::cell_units(2, 2), 2, 2).unwrap();
        assert_eq!(d.rejected, 2);
        assert_eq!(d.matrix.total(), 2);
        assert_eq!(d.matrix.get(1, 1), 1);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        let b = Bounds {
            x_min: 1.0,
            y_min: 0.0,
            x_max: 1.0,
            y_max: 1.0,
        };
        assert!(matches!(
            discretize(&[], &b, 2, 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn out_of_range_region_rejected() {
        let f = four_block_grid();
        let r = Region {
            row_lo: 0,
            row_hi: 4,
            col_lo: 0,
            col_hi: 1,
        };
        assert!(f.subgrid_sum(&r).is_err());
    }

    #[test]
    fn gaussian_is_reproducible() {
        let a = generate_gaussian(2_000, 5.0, 32, 32, 9).unwrap();
        let b = generate_gaussian(2_000, 5.0, 32, 32, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 2_000);
        assert_eq!(generate_gaussian(0, 5.0, 8, 8, 1).unwrap().total(), 0);
        assert!(generate_gaussian(10, 0.0, 8, 8, 1).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let f = four_block_grid();
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "3 3 18\n4 0 0\n1 3 3\n1 3 3\n"
        );
        assert_eq!(FrequencyMatrix::read_snapshot(&buf[..]).unwrap(), f);
        assert!(FrequencyMatrix::read_snapshot(&b"3 3 17\n4 0 0\n1 3 3\n1 3 3\n"[..]).is_err());
    }

    #[test]
    fn point_file_parsing() {
        let text = "# header\n1.5,2\n\n  3 , 4 # trailing\n";
        let pts = read_points(text.as_bytes()).unwrap();
        assert_eq!(
            pts,
            vec![
                PointRecord { x: 1.5, y: 2.0 },
                PointRecord { x: 3.0, y: 4.0 }
            ]
        );
        assert!(read_points("1,2,3\n".as_bytes()).is_err());
        assert!(read_points("nan,2\n".as_bytes()).is_err());
    }
}
