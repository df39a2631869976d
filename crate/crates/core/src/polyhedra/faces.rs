//! Face lattices of convex polyhedra, indexed by closed active sets.

use std::collections::BTreeSet;

use super::lp::{self, Lp, LpOutcome};
use super::{ConvexPolyhedron, Row};
use crate::error::{Error, Result};
use crate::Config;

impl ConvexPolyhedron {
    /// The face where the listed inequalities hold with equality.
    pub fn face(&self, active: &[usize]) -> ConvexPolyhedron {
        let eq: Vec<Row> = active.iter().map(|&i| self.inequalities[i].clone()).collect();
        let ineq: Vec<Row> =
            (0..self.inequalities.len()).filter(|i| !active.contains(i)).map(|i| self.inequalities[i].clone()).collect();
        self.with_only(ineq, eq)
    }

    fn with_only(&self, ineq: Vec<Row>, eq: Vec<Row>) -> ConvexPolyhedron {
        let mut e = self.equalities.clone();
        e.extend(eq);
        ConvexPolyhedron::raw(self.dim, ineq, e)
    }

    /// Smallest closed active set containing `seed`, or `None` if that face is empty.
    pub fn closure(&self, seed: &[usize], cfg: &Config) -> Option<Vec<usize>> {
        let mut eq: Vec<Row> = self.equalities.clone();
        eq.extend(seed.iter().map(|&i| self.inequalities[i].clone()));
        if !lp::solve(&Lp::feasibility(self.dim, &self.inequalities, &eq), cfg.tol_lp).is_feasible() {
            return None;
        }
        let mut out: BTreeSet<usize> = seed.iter().copied().collect();
        for (j, (a, b)) in self.inequalities.iter().enumerate() {
            if out.contains(&j) {
                continue;
            }
            let lp = Lp { dim: self.dim, objective: Some(a), ineq: &self.inequalities, eq: &eq, extra_ineq: &[], extra_eq: &[] };
            if let LpOutcome::Optimal { value, .. } = lp::solve(&lp, cfg.tol_lp) {
                if value >= b - cfg.tol_mem * (1.0 + b.abs()) {
                    out.insert(j);
                }
            }
        }
        Some(out.into_iter().collect())
    }

    /// Closed active sets of all nonempty faces, the whole polyhedron first.
    pub fn faces(&self, cfg: &Config) -> Result<Vec<Vec<usize>>> {
        let Some(top) = self.closure(&[], cfg) else {
            return Ok(vec![]);
        };
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut order = vec![top.clone()];
        seen.insert(top.clone());
        let mut stack = vec![top];
        while let Some(cur) = stack.pop() {
            for j in 0..self.inequalities.len() {
                if cur.contains(&j) {
                    continue;
                }
                let mut seed = cur.clone();
                seed.push(j);
                if let Some(next) = self.closure(&seed, cfg) {
                    if seen.insert(next.clone()) {
                        if seen.len() > cfg.max_patterns {
                            return Err(Error::PatternOverflow { cap: cfg.max_patterns });
                        }
                        order.push(next.clone());
                        stack.push(next);
                    }
                }
            }
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_nine_faces() {
        let sq = ConvexPolyhedron::new(
            2,
            vec![(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 0.0), (vec![0.0, 1.0], 1.0), (vec![0.0, -1.0], 0.0)],
            vec![],
        )
        .unwrap();
        let f = sq.faces(&Config::default()).unwrap();
        assert_eq!(f.len(), 9);
        assert!(f[0].is_empty());
    }

    #[test]
    fn implied_equalities_are_closed_over() {
        // x <= 0, -x <= 0 pins x = 0 for every face
        let p = ConvexPolyhedron::new(1, vec![(vec![1.0], 0.0), (vec![-1.0], 0.0)], vec![]).unwrap();
        let f = p.faces(&Config::default()).unwrap();
        assert_eq!(f, vec![vec![0, 1]]);
    }
}
