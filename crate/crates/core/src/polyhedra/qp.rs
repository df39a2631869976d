//! Primal active-set method for Euclidean projection onto a convex polyhedron.

use super::lp::{self, Lp};
use crate::linalg::{self, Mat};

const MAX_ITERS: usize = 2_000;

/// Projects `p` onto `{x : a·x <= b, e·x = f}`; `None` when the set is empty.
pub fn project(
    p: &[f64],
    ineq: &[(Vec<f64>, f64)],
    eq: &[(Vec<f64>, f64)],
    tol_lp: f64,
) -> Option<Vec<f64>> {
    let n = p.len();
    let start = lp::solve(&Lp::feasibility(n, ineq, eq), tol_lp);
    let mut x = start.point()?.to_vec();
    let mut working: Vec<usize> = Vec::new();
    for _ in 0..MAX_ITERS {
        let rows: Vec<Vec<f64>> = eq
            .iter()
            .map(|(a, _)| a.clone())
            .chain(working.iter().map(|&i| ineq[i].0.clone()))
            .collect();
        let g = linalg::sub(p, &x);
        let d = if rows.is_empty() {
            g.clone()
        } else {
            let m = linalg::mat_from_rows(&rows, n);
            let q = linalg::row_space(&m);
            let coef = q.transpose() * nalgebra::DVector::from_column_slice(&g);
            let proj = &q * coef;
            linalg::sub(&g, proj.as_slice())
        };
        let gscale = 1.0 + linalg::norm(&g);
        if linalg::norm(&d) <= 1e-13 * gscale {
            if working.is_empty() {
                return Some(x);
            }
            let m = linalg::mat_from_rows(&rows, n);
            let mt: Mat = m.transpose();
            let lam = linalg::lstsq(&mt, &g);
            let off = eq.len();
            let mut worst = None;
            let mut worst_v = -1e-12 * gscale;
            for (k, _) in working.iter().enumerate() {
                if lam[off + k] < worst_v {
                    worst_v = lam[off + k];
                    worst = Some(k);
                }
            }
            match worst {
                None => return Some(x),
                Some(k) => {
                    working.remove(k);
                }
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut block = None;
        for (i, (a, b)) in ineq.iter().enumerate() {
            if working.contains(&i) {
                continue;
            }
            let ad = linalg::dot(a, &d);
            if ad > 1e-14 * linalg::norm(a) * linalg::norm(&d) {
                let slack = (b - linalg::dot(a, &x)).max(0.0);
                let ai = slack / ad;
                if ai < alpha {
                    alpha = ai;
                    block = Some(i);
                }
            }
        }
        x = linalg::axpy(&x, alpha, &d);
        if let Some(i) = block {
            working.push(i);
        }
    }
    Some(x)
}

/// Distance from `p` to the polyhedron, `+inf` when empty.
pub fn distance(p: &[f64], ineq: &[(Vec<f64>, f64)], eq: &[(Vec<f64>, f64)], tol_lp: f64) -> f64 {
    match project(p, ineq, eq, tol_lp) {
        Some(x) => linalg::norm(&linalg::sub(p, &x)),
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_projection() {
        let ineq = vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.0)];
        let d = distance(&[1.0, 1.0], &ineq, &[], 1e-9);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
        let d = distance(&[-1.0, 3.0], &ineq, &[], 1e-9);
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_line_segment() {
        // x + y = 1, 0 <= x <= 1
        let ineq = vec![(vec![-1.0, 0.0], 0.0), (vec![1.0, 0.0], 1.0)];
        let eq = vec![(vec![1.0, 1.0], 1.0)];
        let x = project(&[3.0, 0.0], &ineq, &eq, 1e-9).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && x[1].abs() < 1e-10);
    }

    #[test]
    fn empty_set_is_infinitely_far() {
        let ineq = vec![(vec![1.0], -1.0), (vec![-1.0], -1.0)];
        assert!(distance(&[0.0], &ineq, &[], 1e-9).is_infinite());
    }
}
