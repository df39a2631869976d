//! Limiting normal cones of finite unions of polyhedra.
//!
//! Near `x̄` the union coincides with `x̄ + T` where `T` is its tangent cone, so
//! the limiting normal cone is the union of the regular normal cones of `T` over
//! all of its points. Those only depend on the cell of the hyperplane arrangement
//! spanned by the constraint normals; cells are enumerated by a sign-vector DFS
//! with one LP per node.

use std::collections::BTreeSet;

use super::lp::{self, Lp};
use super::{ConvexPolyhedron, PolyhedralCone, PolyhedralSet, Row};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::Config;

struct Piece {
    // (hyperplane index, orientation) per inequality and per equality
    ineq: Vec<(usize, f64)>,
    eq: Vec<(usize, f64)>,
    rows: Vec<Vec<f64>>,
    eq_rows: Vec<Vec<f64>>,
}

fn register(planes: &mut Vec<Vec<f64>>, a: &[f64]) -> Option<(usize, f64)> {
    let s = linalg::norm_inf(a);
    if s < 1e-12 {
        return None;
    }
    let n = linalg::scale(a, 1.0 / s);
    for (k, p) in planes.iter().enumerate() {
        if p.iter().zip(&n).all(|(x, y)| (x - y).abs() <= 1e-10) {
            return Some((k, 1.0));
        }
        if p.iter().zip(&n).all(|(x, y)| (x + y).abs() <= 1e-10) {
            return Some((k, -1.0));
        }
    }
    planes.push(n);
    Some((planes.len() - 1, 1.0))
}

/// `N_set(point)` as a finite union of convex cones.
pub fn limiting_normal_cone(set: &PolyhedralSet, point: &[f64], cfg: &Config) -> Result<PolyhedralCone> {
    check_dim("normal cone point", set.dim(), point.len())?;
    let dim = set.dim();
    let local: Vec<ConvexPolyhedron> = set
        .pieces()
        .iter()
        .filter(|p| p.contains(point, cfg.tol_mem))
        .map(|p| p.tangent_cone_at(point, cfg.tol_mem))
        .collect();
    if local.is_empty() {
        return Err(Error::PointNotInSet);
    }
    let mut planes: Vec<Vec<f64>> = Vec::new();
    let mut pieces = Vec::new();
    for p in &local {
        let mut piece = Piece { ineq: vec![], eq: vec![], rows: vec![], eq_rows: vec![] };
        for (a, _) in p.inequalities() {
            if let Some(h) = register(&mut planes, a) {
                piece.ineq.push(h);
                piece.rows.push(a.clone());
            }
        }
        for (a, _) in p.equalities() {
            if let Some(h) = register(&mut planes, a) {
                piece.eq.push(h);
                piece.eq_rows.push(a.clone());
            }
        }
        pieces.push(piece);
    }
    let mut search = Search { dim, planes: &planes, pieces: &pieces, cfg, signs: vec![], patterns: BTreeSet::new(), leaves: 0 };
    search.descend()?;
    let mut cones: Vec<ConvexPolyhedron> = Vec::new();
    for pattern in &search.patterns {
        let mut acc = ConvexPolyhedron::universe(dim);
        for (pi, active) in pattern {
            let piece = &pieces[*pi];
            let rays: Vec<Vec<f64>> = active.iter().map(|&j| piece.rows[j].clone()).collect();
            let g = PolyhedralCone::generated_by(dim, &rays, &piece.eq_rows, cfg)?;
            acc = acc.intersect(&g.pieces()[0])?;
        }
        cones.push(acc);
    }
    let out = PolyhedralCone(PolyhedralSet::new(dim, cones)?);
    Ok(out.deduplicated(cfg))
}

type Pattern = Vec<(usize, Vec<usize>)>;

struct Search<'a> {
    dim: usize,
    planes: &'a [Vec<f64>],
    pieces: &'a [Piece],
    cfg: &'a Config,
    signs: Vec<i8>,
    patterns: BTreeSet<Pattern>,
    leaves: usize,
}

impl Search<'_> {
    fn sign_of(&self, h: (usize, f64)) -> Option<f64> {
        self.signs.get(h.0).map(|&s| s as f64 * h.1)
    }

    // a piece is excluded once an assigned sign violates one of its constraints
    fn excluded(&self, p: &Piece) -> bool {
        p.ineq.iter().any(|&h| self.sign_of(h).is_some_and(|s| s > 0.0))
            || p.eq.iter().any(|&h| self.sign_of(h).is_some_and(|s| s != 0.0))
    }

    fn feasible(&self) -> bool {
        let mut ineq: Vec<Row> = Vec::new();
        let mut eq: Vec<Row> = Vec::new();
        for (k, &s) in self.signs.iter().enumerate() {
            let h = &self.planes[k];
            match s {
                0 => eq.push((h.clone(), 0.0)),
                1 => ineq.push((linalg::scale(h, -1.0), -1.0)),
                _ => ineq.push((h.clone(), -1.0)),
            }
        }
        lp::solve(&Lp::feasibility(self.dim, &ineq, &eq), self.cfg.tol_lp).is_feasible()
    }

    fn descend(&mut self) -> Result<()> {
        if self.pieces.iter().all(|p| self.excluded(p)) {
            return Ok(());
        }
        if self.signs.len() == self.planes.len() {
            self.leaves += 1;
            if self.leaves > self.cfg.max_patterns {
                return Err(Error::PatternOverflow { cap: self.cfg.max_patterns });
            }
            let mut pattern = Pattern::new();
            for (i, p) in self.pieces.iter().enumerate() {
                if !self.excluded(p) {
                    let active: Vec<usize> = (0..p.ineq.len()).filter(|&j| self.sign_of(p.ineq[j]) == Some(0.0)).collect();
                    pattern.push((i, active));
                }
            }
            self.patterns.insert(pattern);
            return Ok(());
        }
        for s in [0i8, 1, -1] {
            self.signs.push(s);
            if self.feasible() {
                self.descend()?;
            }
            self.signs.pop();
        }
        Ok(())
    }
}
