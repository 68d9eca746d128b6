//! The released artifact: disjoint regions with noisy counts tiling the grid.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::Region;
use crate::privacy::BudgetSplit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf {
    pub region: Region,
    pub ncount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivateHistogram {
    rows: usize,
    cols: usize,
    eps_tot: f64,
    budget: Option<BudgetSplit>,
    leaves: Vec<Leaf>,
}

impl PrivateHistogram {
    /// Fails unless the leaves tile the `rows x cols` domain exactly.
    pub fn new(rows: usize, cols: usize, eps_tot: f64, leaves: Vec<Leaf>) -> Result<Self> {
        check_tiling(rows, cols, leaves.iter().map(|l| &l.region))?;
        if let Some(l) = leaves.iter().find(|l| !l.ncount.is_finite()) {
            return Err(Error::invalid(format!("non-finite count at {}", l.region)));
        }
        Ok(Self {
            rows,
            cols,
            eps_tot,
            budget: None,
            leaves,
        })
    }

    pub fn with_budget(mut self, budget: BudgetSplit) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn eps_tot(&self) -> f64 {
        self.eps_tot
    }

    pub fn budget(&self) -> Option<&BudgetSplit> {
        self.budget.as_ref()
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn noisy_total(&self) -> f64 {
        self.leaves.iter().map(|l| l.ncount).sum()
    }

    /// Negative counts clamped to zero. Pure post-processing.
    pub fn clamp_nonnegative(mut self) -> Self {
        for l in &mut self.leaves {
            l.ncount = l.ncount.max(0.0);
        }
        self
    }

    /// Header `N M eps_tot leaf_count`, then `row_lo row_hi col_lo col_hi ncount` per leaf.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} {} {} {}",
            self.rows,
            self.cols,
            format_sig12(self.eps_tot),
            self.leaves.len()
        )?;
        for l in &self.leaves {
            writeln!(w, "{} {}", l.region, format_sig12(l.ncount))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?;
        let header = header?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(Error::parse(1, "header must be `N M eps_tot leaf_count`"));
        }
        let int = |s: &str, line: usize| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(line, format!("{s:?}: {e}")))
        };
        let real = |s: &str, line: usize| {
            s.parse::<f64>()
                .map_err(|e| Error::parse(line, format!("{s:?}: {e}")))
        };
        let rows = int(h[0], 1)?;
        let cols = int(h[1], 1)?;
        let eps_tot = real(h[2], 1)?;
        let expected = int(h[3], 1)?;
        let mut leaves = Vec::with_capacity(expected);
        for (idx, line) in lines {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(Error::parse(
                    idx + 1,
                    "expected `row_lo row_hi col_lo col_hi ncount`",
                ));
            }
            let region = Region::new(
                int(f[0], idx + 1)?,
                int(f[1], idx + 1)?,
                int(f[2], idx + 1)?,
                int(f[3], idx + 1)?,
            )
            .map_err(|e| Error::parse(idx + 1, e.to_string()))?;
            leaves.push(Leaf {
                region,
                ncount: real(f[4], idx + 1)?,
            });
        }
        if leaves.len() != expected {
            return Err(Error::parse(
                1,
                format!("header announces {expected} leaves, found {}", leaves.len()),
            ));
        }
        Self::new(rows, cols, eps_tot, leaves)
    }
}

/// Every cell of the domain is covered by exactly one region.
pub fn check_tiling<'a>(
    rows: usize,
    cols: usize,
    regions: impl IntoIterator<Item = &'a Region>,
) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("empty domain"));
    }
    let mut cover = vec![false; rows * cols];
    for r in regions {
        if !r.fits(rows, cols) {
            return Err(Error::invalid(format!(
                "region {r} outside {rows}x{cols} domain"
            )));
        }
        for i in r.row_lo..r.row_hi {
            for j in r.col_lo..r.col_hi {
                let c = &mut cover[i * cols + j];
                if *c {
                    return Err(Error::invalid(format!("cell ({i}, {j}) covered twice")));
                }
                *c = true;
            }
        }
    }
    if let Some(idx) = cover.iter().position(|c| !c) {
        return Err(Error::invalid(format!(
            "cell ({}, {}) not covered",
            idx / cols,
            idx % cols
        )));
    }
    Ok(())
}

/// Decimal rendering with 12 significant digits, `%.12g` style.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}
