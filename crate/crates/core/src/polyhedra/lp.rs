//! Dense two-phase simplex for small linear programs over free variables.
//!
//! Problems have the form `min c·x  s.t.  A x <= b,  E x = e` with `x` free.
//! Free variables are split as `x = p - n`, inequality rows receive slacks,
//! and Bland's rule keeps degenerate pivoting finite.

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded { x: Vec<f64> },
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { x, .. } | LpOutcome::Unbounded { x } => Some(x),
            LpOutcome::Infeasible => None,
        }
    }
}

/// A linear program over `dim` free variables.
#[derive(Debug, Clone)]
pub struct Lp<'a> {
    pub dim: usize,
    pub objective: Option<&'a [f64]>,
    pub ineq: &'a [(Vec<f64>, f64)],
    pub eq: &'a [(Vec<f64>, f64)],
    pub extra_ineq: &'a [(Vec<f64>, f64)],
    pub extra_eq: &'a [(Vec<f64>, f64)],
}

impl<'a> Lp<'a> {
    pub fn feasibility(dim: usize, ineq: &'a [(Vec<f64>, f64)], eq: &'a [(Vec<f64>, f64)]) -> Self {
        Lp { dim, objective: None, ineq, eq, extra_ineq: &[], extra_eq: &[] }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    // row-major, last column is the right-hand side
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }
    fn rhs(&self, r: usize) -> f64 {
        self.t[r * (self.cols + 1) + self.cols]
    }
    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.t[pr * w + pc];
        for c in 0..w {
            self.t[pr * w + c] /= p;
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                for c in 0..w {
                    let v = self.t[pr * w + c];
                    self.t[r * w + c] -= f * v;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Minimizes `cost` over the current basis; `allowed` masks entering columns.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<bool, ()> {
        for _ in 0..MAX_PIVOTS {
            // reduced costs: c_j - c_B B^-1 a_j, computed from the tableau directly
            let mut enter = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for r in 0..self.rows {
                    rc -= cost[self.basis[r]] * self.at(r, j);
                }
                if rc < -1e-10 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(pc) = enter else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-13
                                || (ratio <= lratio + 1e-13 && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                None => return Ok(false),
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
        Err(())
    }
}

/// Solves the program. `tol` bounds the phase-one residual accepted as feasible,
/// relative to the scale of the right-hand sides.
pub fn solve(lp: &Lp, tol: f64) -> LpOutcome {
    let n = lp.dim;
    let ineq: Vec<&(Vec<f64>, f64)> = lp.ineq.iter().chain(lp.extra_ineq.iter()).collect();
    let eq: Vec<&(Vec<f64>, f64)> = lp.eq.iter().chain(lp.extra_eq.iter()).collect();
    let m1 = ineq.len();
    let m = m1 + eq.len();
    if m == 0 {
        let x = vec![0.0; n];
        return match lp.objective {
            Some(c) if c.iter().any(|v| v.abs() > 0.0) => {
                let x: Vec<f64> = c.iter().map(|v| -v).collect();
                LpOutcome::Unbounded { x }
            }
            _ => LpOutcome::Optimal { x, value: 0.0 },
        };
    }
    // columns: p (n), n (n), slacks (m1), artificials (m)
    let cols = 2 * n + m1 + m;
    let w = cols + 1;
    let mut t = vec![0.0; m * w];
    let mut bscale: f64 = 1.0;
    for (r, (a, b)) in ineq.iter().chain(eq.iter()).enumerate() {
        bscale = bscale.max(b.abs());
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[r * w + j] = sign * a[j];
            t[r * w + n + j] = -sign * a[j];
        }
        if r < m1 {
            t[r * w + 2 * n + r] = sign;
        }
        t[r * w + 2 * n + m1 + r] = 1.0;
        t[r * w + cols] = sign * b;
    }
    let basis: Vec<usize> = (0..m).map(|r| 2 * n + m1 + r).collect();
    let mut tab = Tableau { rows: m, cols, t, basis };

    let mut cost1 = vec![0.0; cols];
    for c in cost1.iter_mut().skip(2 * n + m1) {
        *c = 1.0;
    }
    let allowed_all = vec![true; cols];
    if tab.optimize(&cost1, &allowed_all).is_err() {
        return LpOutcome::Infeasible;
    }
    let infeas: f64 = (0..m)
        .filter(|&r| tab.basis[r] >= 2 * n + m1)
        .map(|r| tab.rhs(r))
        .sum();
    if infeas > tol * bscale * (m as f64).max(1.0) {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis
    for r in 0..m {
        if tab.basis[r] >= 2 * n + m1 {
            let mut best = None;
            let mut bestv = 1e-9;
            for j in 0..2 * n + m1 {
                let v = tab.at(r, j).abs();
                if v > bestv && !tab.basis.contains(&j) {
                    bestv = v;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                tab.pivot(r, j);
            }
        }
    }
    let mut allowed = vec![true; cols];
    for a in allowed.iter_mut().skip(2 * n + m1) {
        *a = false;
    }
    let extract = |tab: &Tableau| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for r in 0..m {
            let b = tab.basis[r];
            if b < n {
                x[b] += tab.rhs(r);
            } else if b < 2 * n {
                x[b - n] -= tab.rhs(r);
            }
        }
        x
    };
    let Some(c) = lp.objective else {
        return LpOutcome::Optimal { x: extract(&tab), value: 0.0 };
    };
    let mut cost2 = vec![0.0; cols];
    for j in 0..n {
        cost2[j] = c[j];
        cost2[n + j] = -c[j];
    }
    // residual artificials stuck at zero level must not carry cost
    match tab.optimize(&cost2, &allowed) {
        Ok(true) => {
            let x = extract(&tab);
            let value = x.iter().zip(c).map(|(a, b)| a * b).sum();
            LpOutcome::Optimal { x, value }
        }
        Ok(false) => LpOutcome::Unbounded { x: extract(&tab) },
        Err(()) => LpOutcome::Infeasible,
    }
}
