//! Output of any release mechanism, HTF or baseline.

use crate::baselines::{
    build_adaptive_grid, build_flat_uniform, build_kdtree, build_quadtree, build_singular,
    build_uniform_grid, AdaptiveGridParams, KdTreeParams, QuadTreeParams,
};
use crate::error::Result;
use crate::grid::FrequencyMatrix;
use crate::histogram::PrivateHistogram;
use crate::htf::{self, HtfParams, TreeNode};
use crate::privacy::{BudgetLedger, NoiseSource};

#[derive(Debug, Clone)]
pub struct Release {
    pub histogram: PrivateHistogram,
    pub ledger: BudgetLedger,
    /// Tree height actually used, for tree-based mechanisms.
    pub height: Option<u32>,
    /// The pruned HTF tree, annotated with noisy counts. Holds true counts,
    /// so it must never be exported.
    pub tree: Option<TreeNode>,
}

/// Every release mechanism with its parameters, for uniform dispatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanism {
    Htf(HtfParams),
    UniformGrid {
        eps_tot: f64,
        c0: f64,
    },
    AdaptiveGrid {
        eps_tot: f64,
        params: AdaptiveGridParams,
    },
    QuadTree {
        eps_tot: f64,
        params: QuadTreeParams,
    },
    KdTree {
        eps_tot: f64,
        params: KdTreeParams,
    },
    Singular {
        eps_tot: f64,
    },
    FlatUniform {
        eps_tot: f64,
    },
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Htf(_) => "htf",
            Mechanism::UniformGrid { .. } => "ug",
            Mechanism::AdaptiveGrid { .. } => "ag",
            Mechanism::QuadTree { .. } => "quadtree",
            Mechanism::KdTree { .. } => "kdtree",
            Mechanism::Singular { .. } => "singular",
            Mechanism::FlatUniform { .. } => "flat",
        }
    }

    pub fn eps_tot(&self) -> f64 {
        match *self {
            Mechanism::Htf(p) => p.eps_tot,
            Mechanism::UniformGrid { eps_tot, .. }
            | Mechanism::AdaptiveGrid { eps_tot, .. }
            | Mechanism::QuadTree { eps_tot, .. }
            | Mechanism::KdTree { eps_tot, .. }
            | Mechanism::Singular { eps_tot }
            | Mechanism::FlatUniform { eps_tot } => eps_tot,
        }
    }

    /// Same mechanism with a different total budget.
    pub fn with_eps_tot(self, eps: f64) -> Self {
        match self {
            Mechanism::Htf(mut p) => {
                p.eps_tot = eps;
                Mechanism::Htf(p)
            }
            Mechanism::UniformGrid { c0, .. } => Mechanism::UniformGrid { eps_tot: eps, c0 },
            Mechanism::AdaptiveGrid { params, .. } => Mechanism::AdaptiveGrid {
                eps_tot: eps,
                params,
            },
            Mechanism::QuadTree { params, .. } => Mechanism::QuadTree {
                eps_tot: eps,
                params,
            },
            Mechanism::KdTree { params, .. } => Mechanism::KdTree {
                eps_tot: eps,
                params,
            },
            Mechanism::Singular { .. } => Mechanism::Singular { eps_tot: eps },
            Mechanism::FlatUniform { .. } => Mechanism::FlatUniform { eps_tot: eps },
        }
    }

    /// Runs the mechanism and checks its ledger against `eps_tot`.
    pub fn release(&self, f: &FrequencyMatrix, noise: &NoiseSource) -> Result<Release> {
        let r = match *self {
            Mechanism::Htf(p) => htf::release(f, &p, noise)?,
            Mechanism::UniformGrid { eps_tot, c0 } => build_uniform_grid(f, eps_tot, c0, noise)?,
            Mechanism::AdaptiveGrid { eps_tot, params } => {
                build_adaptive_grid(f, eps_tot, params, noise)?
            }
            Mechanism::QuadTree { eps_tot, params } => build_quadtree(f, eps_tot, params, noise)?,
            Mechanism::KdTree { eps_tot, params } => build_kdtree(f, eps_tot, params, noise)?,
            Mechanism::Singular { eps_tot } => build_singular(f, eps_tot, noise)?,
            Mechanism::FlatUniform { eps_tot } => build_flat_uniform(f, eps_tot, noise)?,
        };
        r.ledger.assert_valid(self.eps_tot())?;
        Ok(r)
    }
}
