use crate::error::{Error, Result};

/// Slack allowed when checking that budget components add up.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Decomposition of the total privacy budget into partitioning, data
/// perturbation and height estimation shares.
///
/// `eps_prt_level` is set when the per-level partitioning budget was fixed
/// directly rather than derived as `eps_prt / h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSplit {
    pub eps_tot: f64,
    pub eps_prt: f64,
    pub eps_data: f64,
    pub eps_height: f64,
    pub eps_prt_level: Option<f64>,
}

impl BudgetSplit {
    /// `eps_height` may be zero when the tree height is fixed by configuration.
    pub fn new(eps_tot: f64, eps_prt: f64, eps_data: f64, eps_height: f64) -> Result<Self> {
        let s = Self {
            eps_tot,
            eps_prt,
            eps_data,
            eps_height,
            eps_prt_level: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Data budget is whatever is left after partitioning and height estimation.
    pub fn from_total(eps_tot: f64, eps_prt: f64, eps_height: f64) -> Result<Self> {
        Self::new(eps_tot, eps_prt, eps_tot - eps_prt - eps_height, eps_height)
    }

    /// Fixed per-level partitioning budget: `eps_data = eps_tot - eps_prt_level * h - eps_height`.
    pub fn from_level(eps_tot: f64, eps_prt_level: f64, eps_height: f64, h: u32) -> Result<Self> {
        if h == 0 {
            return Err(Error::invalid("height must be at least 1"));
        }
        let eps_prt = eps_prt_level * h as f64;
        let mut s = Self::new(eps_tot, eps_prt, eps_tot - eps_prt - eps_height, eps_height)?;
        s.eps_prt_level = Some(eps_prt_level);
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.eps_tot, self.eps_prt, self.eps_data];
        if parts.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!(
                "budget components must be positive: tot={} prt={} data={}",
                self.eps_tot, self.eps_prt, self.eps_data
            )));
        }
        if !(self.eps_height.is_finite() && self.eps_height >= 0.0) {
            return Err(Error::Config(format!(
                "height budget must be non-negative, got {}",
                self.eps_height
            )));
        }
        let sum = self.eps_prt + self.eps_data + self.eps_height;
        if (sum - self.eps_tot).abs() > BUDGET_TOLERANCE {
            return Err(Error::Config(format!(
                "budget parts sum to {sum}, expected {}",
                self.eps_tot
            )));
        }
        Ok(())
    }

    /// Per-level partitioning budget for a tree of height `h`.
    pub fn prt_per_level(&self, h: u32) -> Result<f64> {
        match self.eps_prt_level {
            Some(v) => Ok(v),
            None => uniform_level_budget(self.eps_prt, h),
        }
    }
}

/// `eps_prt / h`: the same partitioning budget at every level.
pub fn uniform_level_budget(eps_prt: f64, h: u32) -> Result<f64> {
    if h == 0 {
        return Err(Error::invalid("uniform level budget needs h >= 1"));
    }
    Ok(eps_prt / h as f64)
}

/// Budget for level `i` of a binary tree of nominal height `h` that minimizes
/// total count variance over the leaves, where the levels' shares are
/// proportional to `2^((h - i) / 3)` and sum to `eps`.
pub fn geometric_level_budget(i: u32, h: u32, eps: f64) -> Result<f64> {
    geometric_level_budget_with_fanout(i, h, eps, 2.0)
}

/// Same allocation for a complete tree of the given fanout (e.g. 4 for quadtrees).
pub fn geometric_level_budget_with_fanout(i: u32, h: u32, eps: f64, fanout: f64) -> Result<f64> {
    if i > h {
        return Err(Error::invalid(format!("level {i} outside [0, {h}]")));
    }
    if !(fanout > 1.0) {
        return Err(Error::invalid(format!(
            "fanout must exceed 1, got {fanout}"
        )));
    }
    let r = fanout.cbrt();
    let num = r.powf((h - i) as f64) * eps * (r - 1.0);
    let den = r.powf((h + 1) as f64) - 1.0;
    Ok(num / den)
}
