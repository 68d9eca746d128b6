use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;

use super::budget::BUDGET_TOLERANCE;
use crate::error::{Error, Result};

/// Position of a node in a partition tree, as the sequence of child indices
/// taken from the root. A trailing [`NodePath::ANY`] stands for "every child",
/// used when a charge applies identically to a family of disjoint siblings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodePath(Vec<u32>);

impl NodePath {
    pub const ANY: u32 = u32::MAX;

    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn child(&self, idx: u32) -> Self {
        let mut v = self.0.clone();
        v.push(idx);
        Self(v)
    }

    /// Every child of this node, each charged the same amount.
    pub fn any_child(&self) -> Self {
        self.child(Self::ANY)
    }

    pub fn steps(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    fn is_wildcard(&self) -> bool {
        self.0.last() == Some(&Self::ANY)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("r")?;
        for s in &self.0 {
            if *s == Self::ANY {
                f.write_str(".*")?;
            } else {
                write!(f, ".{s}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub label: String,
    pub path: NodePath,
    pub level: u32,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathTotal {
    pub path: NodePath,
    pub spent: f64,
}

/// Append-only log of budget charges.
///
/// Charges on the same root-to-leaf path compose sequentially; charges on
/// disjoint subtrees compose in parallel. [`BudgetLedger::path_totals`] sums,
/// for every maximal charged path, all charges made at that path or any of
/// its ancestors.
#[derive(Debug, Clone, Default)]
pub struct BudgetLedger {
    entries: Vec<LedgerEntry>,
    warnings: Vec<String>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, label: &str, path: &NodePath, level: u32, eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!(
                "charge {label} at {path}: epsilon must be positive, got {eps}"
            )));
        }
        if path
            .steps()
            .iter()
            .rev()
            .skip(1)
            .any(|&s| s == NodePath::ANY)
        {
            return Err(Error::invalid(format!(
                "wildcard only allowed as last step: {path}"
            )));
        }
        self.entries.push(LedgerEntry {
            label: label.to_owned(),
            path: path.clone(),
            level,
            eps,
        });
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: BudgetLedger) {
        self.entries.extend(other.entries);
        self.warnings.extend(other.warnings);
    }

    /// Total spent along every maximal charged path.
    pub fn path_totals(&self) -> Vec<PathTotal> {
        let mut at: BTreeMap<&NodePath, f64> = BTreeMap::new();
        for e in &self.entries {
            *at.entry(&e.path).or_default() += e.eps;
        }
        // Every proper prefix of a charged path, plus its wildcard sibling form.
        let mut interior: HashSet<NodePath> = HashSet::new();
        for p in at.keys() {
            let s = p.steps();
            for l in 0..s.len() {
                interior.insert(NodePath(s[..l].to_vec()));
                if l > 0 {
                    let mut w = s[..l - 1].to_vec();
                    w.push(NodePath::ANY);
                    interior.insert(NodePath(w));
                }
            }
        }
        let mut out = Vec::new();
        for p in at.keys() {
            if interior.contains(*p) {
                continue;
            }
            let s = p.steps();
            let mut spent = 0.0;
            for l in 0..=s.len() {
                let prefix = NodePath(s[..l].to_vec());
                spent += at.get(&prefix).copied().unwrap_or(0.0);
                if l > 0 && !(l == s.len() && p.is_wildcard()) {
                    let mut w = s[..l - 1].to_vec();
                    w.push(NodePath::ANY);
                    spent += at.get(&NodePath(w)).copied().unwrap_or(0.0);
                }
            }
            out.push(PathTotal {
                path: (*p).clone(),
                spent,
            });
        }
        out
    }

    /// Largest spend over all root-to-leaf paths (0 for an empty ledger).
    pub fn max_path_total(&self) -> f64 {
        self.path_totals()
            .iter()
            .map(|t| t.spent)
            .fold(0.0, f64::max)
    }

    /// Fails with [`Error::BudgetOverflow`] naming the first path whose
    /// sequential total exceeds `eps_tot`.
    pub fn assert_valid(&self, eps_tot: f64) -> Result<()> {
        for t in self.path_totals() {
            if t.spent > eps_tot + BUDGET_TOLERANCE {
                return Err(Error::BudgetOverflow {
                    path: t.path.to_string(),
                    spent: t.spent,
                    limit: eps_tot,
                });
            }
        }
        Ok(())
    }

    /// Audit log: `seq,label,path,level,eps`, warnings as `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "seq,label,path,level,eps")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(w, "{i},{},{},{},{}", e.label, e.path, e.level, e.eps)?;
        }
        for msg in &self.warnings {
            writeln!(w, "# warning: {msg}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ledger_is_valid() {
        let l = BudgetLedger::new();
        assert!(l.assert_valid(0.1).is_ok());
        assert_eq!(l.max_path_total(), 0.0);
    }

    #[test]
    fn siblings_compose_in_parallel() {
        let mut l = BudgetLedger::new();
        let root = NodePath::root();
        l.charge("height", &root, 2, 0.1).unwrap();
        l.charge("data", &root.child(0), 1, 0.4).unwrap();
        l.charge("data", &root.child(1), 1, 0.4).unwrap();
        l.charge("data", &root.child(1).child(0), 0, 0.5).unwrap();
        let totals = l.path_totals();
        assert_eq!(totals.len(), 2);
        assert!((totals[0].spent - 0.5).abs() < 1e-12);
        assert!((totals[1].spent - 1.0).abs() < 1e-12);
        assert!(l.assert_valid(1.0).is_ok());
    }

    #[test]
    fn sequential_double_charge_overflows() {
        let mut l = BudgetLedger::new();
        let p = NodePath::root().child(3);
        l.charge("data", &p, 0, 0.07).unwrap();
        l.charge("data", &p, 0, 0.07).unwrap();
        match l.assert_valid(0.1) {
            Err(Error::BudgetOverflow { path, .. }) => assert_eq!(path, "r.3"),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn wildcard_children_share_one_charge() {
        let mut l = BudgetLedger::new();
        let root = NodePath::root();
        l.charge("coarse", &root.child(0), 1, 0.5).unwrap();
        l.charge("fine", &root.child(0).any_child(), 0, 0.5)
            .unwrap();
        l.charge("coarse", &root.child(1), 1, 0.5).unwrap();
        l.charge("fine", &root.child(1).any_child(), 0, 0.5)
            .unwrap();
        l.charge("extra", &root.child(1).child(2), 0, 0.2).unwrap();
        let totals = l.path_totals();
        let find = |s: &str| {
            totals
                .iter()
                .find(|t| t.path.to_string() == s)
                .unwrap()
                .spent
        };
        assert!((find("r.0.*") - 1.0).abs() < 1e-12);
        assert!((find("r.1.2") - 1.2).abs() < 1e-12);
        assert!(l.assert_valid(1.0).is_err());
    }

    #[test]
    fn rejects_non_positive_charge() {
        let mut l = BudgetLedger::new();
        assert!(l.charge("x", &NodePath::root(), 0, 0.0).is_err());
        assert!(l.charge("x", &NodePath::root(), 0, f64::NAN).is_err());
    }

    #[test]
    fn csv_export() {
        let mut l = BudgetLedger::new();
        l.charge("height", &NodePath::root(), 3, 0.0001).unwrap();
        l.charge("split", &NodePath::root().child(1), 2, 0.25)
            .unwrap();
        l.warn("nothing left");
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "seq,label,path,level,eps\n0,height,r,3,0.0001\n1,split,r.1,2,0.25\n# warning: nothing left\n"
        );
    }
}
