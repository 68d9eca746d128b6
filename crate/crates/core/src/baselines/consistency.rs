//! Hierarchical consistency for noisy count trees.

use crate::error::{Error, Result};
use crate::grid::Region;

#[derive(Debug, Clone, PartialEq)]
pub struct CountNode {
    pub region: Region,
    pub noisy: f64,
    /// Variance of the noise in `noisy`.
    pub variance: f64,
    pub children: Vec<usize>,
}

/// A tree stored as a flat node list; node 0 is the root and every child
/// index is larger than its parent's.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTree {
    nodes: Vec<CountNode>,
}

impl CountTree {
    pub fn new(nodes: Vec<CountNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("count tree needs a root"));
        }
        let mut has_parent = vec![false; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if !(n.variance >= 0.0) || !n.noisy.is_finite() {
                return Err(Error::invalid(format!("node {i}: bad count or variance")));
            }
            for &c in &n.children {
                if c <= i || c >= nodes.len() || has_parent[c] {
                    return Err(Error::invalid(format!("node {i}: bad child index {c}")));
                }
                has_parent[c] = true;
            }
        }
        if let Some(orphan) = has_parent.iter().skip(1).position(|p| !p) {
            return Err(Error::invalid(format!("node {} has no parent", orphan + 1)));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[CountNode] {
        &self.nodes
    }

    pub fn leaves(&self) -> impl Iterator<Item = &CountNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// Common fanout if every internal node has it and all leaves sit at
    /// the same depth.
    pub fn uniform_fanout(&self) -> Option<usize> {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut fanout = None;
        let mut leaf_depth = None;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.children.is_empty() {
                if *leaf_depth.get_or_insert(depth[i]) != depth[i] {
                    return None;
                }
                continue;
            }
            if *fanout.get_or_insert(n.children.len()) != n.children.len() {
                return None;
            }
            for &c in &n.children {
                depth[c] = depth[i] + 1;
            }
        }
        Some(fanout.unwrap_or(1))
    }

    /// True when every internal node equals the sum of its children.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.nodes.iter().all(|n| {
            n.children.is_empty() || {
                let s: f64 = n.children.iter().map(|&c| self.nodes[c].noisy).sum();
                (s - n.noisy).abs() <= tol * n.noisy.abs().max(1.0)
            }
        })
    }
}

/// Least-squares consistent estimates: afterwards every parent equals the
/// sum of its children.
///
/// Bottom-up, each node's own measurement is averaged with the sum of its
/// children's estimates, weighted by inverse variance. Top-down, the
/// difference between a parent's final value and the sum of its children's
/// estimates is spread over the children in proportion to their variances.
/// With equal variances per level this is the usual two-pass estimator for
/// hierarchical histograms. Only complete trees with a uniform fanout are
/// accepted.
pub fn enforce_hierarchical_consistency(tree: &mut CountTree) -> Result<()> {
    if tree.uniform_fanout().is_none() {
        return Err(Error::Unsupported(
            "consistency needs a complete tree with uniform fanout".into(),
        ));
    }
    let n = tree.nodes.len();
    let mut z = vec![0.0; n];
    let mut var = vec![0.0; n];
    for i in (0..n).rev() {
        let node = &tree.nodes[i];
        if node.children.is_empty() {
            z[i] = node.noisy;
            var[i] = node.variance;
            continue;
        }
        let s: f64 = node.children.iter().map(|&c| z[c]).sum();
        let vs: f64 = node.children.iter().map(|&c| var[c]).sum();
        (z[i], var[i]) = combine(node.noisy, node.variance, s, vs);
    }

    let mut x = vec![0.0; n];
    x[0] = z[0];
    for i in 0..n {
        let children = &tree.nodes[i].children;
        if children.is_empty() {
            continue;
        }
        let s: f64 = children.iter().map(|&c| z[c]).sum();
        let vs: f64 = children.iter().map(|&c| var[c]).sum();
        let residual = x[i] - s;
        for &c in children {
            let share = if vs > 0.0 {
                var[c] / vs
            } else {
                1.0 / children.len() as f64
            };
            x[c] = z[c] + residual * share;
        }
    }
    for (node, v) in tree.nodes.iter_mut().zip(x) {
        node.noisy = v;
    }
    Ok(())
}

/// Inverse-variance average of two independent estimates.
fn combine(a: f64, va: f64, b: f64, vb: f64) -> (f64, f64) {
    if va == 0.0 {
        return (a, 0.0);
    }
    if vb == 0.0 {
        return (b, 0.0);
    }
    let (wa, wb) = (1.0 / va, 1.0 / vb);
    ((a * wa + b * wb) / (wa + wb), 1.0 / (wa + wb))
}
