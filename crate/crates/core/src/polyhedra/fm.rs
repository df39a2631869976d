//! Fourier–Motzkin projection with LP-based redundancy removal.

use super::lp::{self, Lp, LpOutcome};
use super::Row;
use crate::linalg;

const COEF_EPS: f64 = 1e-12;

/// A constraint system in the middle of elimination; `None` rows mean "empty set".
#[derive(Debug, Clone)]
pub(crate) struct System {
    pub dim: usize,
    pub ineq: Vec<Row>,
    pub eq: Vec<Row>,
}

fn normalize(row: &Row) -> Option<Row> {
    let s = linalg::norm_inf(&row.0);
    if s < COEF_EPS {
        return None;
    }
    Some((linalg::scale(&row.0, 1.0 / s), row.1 / s))
}

fn same_row(a: &Row, b: &Row) -> bool {
    a.0.iter().zip(&b.0).all(|(x, y)| (x - y).abs() <= 1e-12) && (a.1 - b.1).abs() <= 1e-12
}

impl System {
    /// Normalizes rows, drops trivial ones and reports infeasibility found on the way.
    pub fn tidy(mut self, tol: f64) -> Option<System> {
        let mut ineq: Vec<Row> = Vec::new();
        for r in self.ineq.drain(..) {
            match normalize(&r) {
                Some(n) => {
                    if !ineq.iter().any(|q| same_row(q, &n)) {
                        ineq.push(n);
                    }
                }
                None => {
                    if r.1 < -tol * (1.0 + r.1.abs()) {
                        return None;
                    }
                }
            }
        }
        let eq = reduce_equalities(self.dim, self.eq, tol)?;
        // opposite inequality pairs become equalities
        let mut extra_eq = Vec::new();
        let mut keep = vec![true; ineq.len()];
        for i in 0..ineq.len() {
            for j in i + 1..ineq.len() {
                if keep[i] && keep[j] {
                    let opp = ineq[i].0.iter().zip(&ineq[j].0).all(|(x, y)| (x + y).abs() <= 1e-12)
                        && (ineq[i].1 + ineq[j].1).abs() <= 1e-12;
                    if opp {
                        keep[i] = false;
                        keep[j] = false;
                        extra_eq.push(ineq[i].clone());
                    }
                }
            }
        }
        let ineq: Vec<Row> = ineq.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect();
        let eq = if extra_eq.is_empty() {
            eq
        } else {
            reduce_equalities(self.dim, eq.into_iter().chain(extra_eq).collect(), tol)?
        };
        Some(System { dim: self.dim, ineq, eq })
    }

    /// Removes variable `var` (the dimension drops by one).
    pub fn eliminate(self, var: usize, tol: f64) -> Option<System> {
        let dim = self.dim;
        let drop = |v: &[f64]| -> Vec<f64> {
            v.iter().enumerate().filter(|(k, _)| *k != var).map(|(_, x)| *x).collect()
        };
        // prefer substitution through an equality
        let pivot = self
            .eq
            .iter()
            .enumerate()
            .filter(|(_, r)| r.0[var].abs() > COEF_EPS)
            .max_by(|a, b| a.1 .0[var].abs().partial_cmp(&b.1 .0[var].abs()).unwrap())
            .map(|(i, _)| i);
        if let Some(p) = pivot {
            let (pa, pb) = self.eq[p].clone();
            let sub = |r: &Row| -> Row {
                let f = r.0[var] / pa[var];
                let a: Vec<f64> = r.0.iter().zip(&pa).map(|(x, y)| x - f * y).collect();
                (drop(&a), r.1 - f * pb)
            };
            let ineq = self.ineq.iter().map(sub).collect();
            let eq = self.eq.iter().enumerate().filter(|(i, _)| *i != p).map(|(_, r)| sub(r)).collect();
            return System { dim: dim - 1, ineq, eq }.tidy(tol);
        }
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut out = Vec::new();
        for r in &self.ineq {
            let c = r.0[var];
            if c > COEF_EPS {
                pos.push(r);
            } else if c < -COEF_EPS {
                neg.push(r);
            } else {
                out.push((drop(&r.0), r.1));
            }
        }
        for p in &pos {
            for n in &neg {
                let fp = 1.0 / p.0[var];
                let fn_ = -1.0 / n.0[var];
                let a: Vec<f64> = p.0.iter().zip(&n.0).map(|(x, y)| fp * x + fn_ * y).collect();
                out.push((drop(&a), fp * p.1 + fn_ * n.1));
            }
        }
        let eq = self.eq.iter().map(|r| (drop(&r.0), r.1)).collect();
        System { dim: dim - 1, ineq: out, eq }.tidy(tol)
    }

    pub fn is_empty(&self, tol_lp: f64) -> bool {
        if self.dim == 0 {
            return false;
        }
        !lp::solve(&Lp::feasibility(self.dim, &self.ineq, &self.eq), tol_lp).is_feasible()
    }

    /// Drops inequalities implied by the others.
    pub fn remove_redundant(mut self, tol_mem: f64, tol_lp: f64) -> Option<System> {
        if self.is_empty(tol_lp) {
            return None;
        }
        let mut i = 0;
        while i < self.ineq.len() {
            let (a, b) = self.ineq[i].clone();
            let others: Vec<Row> =
                self.ineq.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, r)| r.clone()).collect();
            let c: Vec<f64> = a.iter().map(|v| -v).collect();
            let lp = Lp { dim: self.dim, objective: Some(&c), ineq: &others, eq: &self.eq, extra_ineq: &[], extra_eq: &[] };
            let redundant = match lp::solve(&lp, tol_lp) {
                LpOutcome::Optimal { value, .. } => -value <= b + tol_mem * (1.0 + b.abs()),
                LpOutcome::Unbounded { .. } => false,
                LpOutcome::Infeasible => false,
            };
            if redundant {
                self.ineq.remove(i);
            } else {
                i += 1;
            }
        }
        Some(self)
    }
}

/// Gaussian elimination on the augmented equality system; `None` if inconsistent.
pub(crate) fn reduce_equalities(dim: usize, eq: Vec<Row>, tol: f64) -> Option<Vec<Row>> {
    let mut rows: Vec<Row> = eq;
    let mut out: Vec<Row> = Vec::new();
    let mut col = 0;
    while !rows.is_empty() && col < dim {
        let (pi, pv) = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.0[col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if pv <= 1e-10 {
            col += 1;
            continue;
        }
        let (pa, pb) = rows.remove(pi);
        for r in rows.iter_mut() {
            let f = r.0[col] / pa[col];
            if f != 0.0 {
                for k in 0..dim {
                    r.0[k] -= f * pa[k];
                }
                r.0[col] = 0.0;
                r.1 -= f * pb;
            }
        }
        out.push(normalize(&(pa, pb)).expect("pivot row is nonzero"));
        col += 1;
    }
    for r in rows {
        if linalg::norm_inf(&r.0) <= 1e-10 && r.1.abs() > tol * (1.0 + r.1.abs()) * 10.0 {
            return None;
        }
    }
    Some(out)
}

/// Projects onto the coordinates in `keep` (in that order).
pub(crate) fn project(sys: System, keep: &[usize], tol_mem: f64, tol_lp: f64) -> Option<System> {
    let mut order: Vec<usize> = (0..sys.dim).collect();
    let mut sys = sys.tidy(tol_mem)?;
    let mut dropped: Vec<usize> = (0..sys.dim).filter(|k| !keep.contains(k)).collect();
    // substitution through an equality first, then the cheapest pairing
    while !dropped.is_empty() {
        let pick = dropped
            .iter()
            .position(|&v| sys.eq.iter().any(|r| r.0[v].abs() > COEF_EPS))
            .unwrap_or_else(|| {
                // the variable producing the fewest new rows
                let cost = |v: usize| {
                    let p = sys.ineq.iter().filter(|r| r.0[v] > COEF_EPS).count();
                    let n = sys.ineq.iter().filter(|r| r.0[v] < -COEF_EPS).count();
                    p * n
                };
                (0..dropped.len()).min_by_key(|&i| cost(dropped[i])).unwrap()
            });
        let v = dropped.remove(pick);
        sys = sys.eliminate(v, tol_mem)?;
        order.remove(v);
        for d in dropped.iter_mut() {
            if *d > v {
                *d -= 1;
            }
        }
        if sys.ineq.len() > 2 * (sys.dim + 1) {
            sys = sys.remove_redundant(tol_mem, tol_lp)?;
        }
    }
    // reorder remaining coordinates to follow `keep`
    let perm: Vec<usize> = keep.iter().map(|k| order.iter().position(|o| o == k).unwrap()).collect();
    let reorder = |v: &[f64]| -> Vec<f64> { perm.iter().map(|&p| v[p]).collect() };
    let sys = System {
        dim: keep.len(),
        ineq: sys.ineq.iter().map(|r| (reorder(&r.0), r.1)).collect(),
        eq: sys.eq.iter().map(|r| (reorder(&r.0), r.1)).collect(),
    };
    sys.remove_redundant(tol_mem, tol_lp)
}
