//! Finite unions of H-representation polyhedra, cones, and the LP/QP kernels behind them.

mod faces;
mod fm;
mod limiting;
mod system;
pub mod lp;
pub mod qp;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat};
use crate::Config;
use lp::{Lp, LpOutcome};

pub use limiting::limiting_normal_cone;
pub use system::ConeSystem;

/// One linear constraint `(a, b)`: `a·x <= b` or `a·x = b` depending on the list holding it.
pub type Row = (Vec<f64>, f64);

/// `{x : a·x <= b for inequalities, e·x = f for equalities}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexPolyhedron {
    dim: usize,
    inequalities: Vec<Row>,
    equalities: Vec<Row>,
    #[serde(skip)]
    empty: OnceLock<bool>,
}

impl PartialEq for ConvexPolyhedron {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.inequalities == other.inequalities && self.equalities == other.equalities
    }
}

fn active_tol(b: f64, tol: f64) -> f64 {
    tol * (1.0 + b.abs())
}

impl ConvexPolyhedron {
    pub fn new(dim: usize, inequalities: Vec<Row>, equalities: Vec<Row>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("polyhedron dimension must be positive".into()));
        }
        for (a, _) in inequalities.iter().chain(equalities.iter()) {
            check_dim("polyhedron row", dim, a.len())?;
        }
        Ok(Self::raw(dim, inequalities, equalities))
    }

    pub(crate) fn raw(dim: usize, inequalities: Vec<Row>, equalities: Vec<Row>) -> Self {
        ConvexPolyhedron { dim, inequalities, equalities, empty: OnceLock::new() }
    }

    pub fn universe(dim: usize) -> Self {
        Self::raw(dim, vec![], vec![])
    }

    /// The origin `{0}`.
    pub fn origin(dim: usize) -> Self {
        Self::raw(dim, vec![], (0..dim).map(|i| (unit(dim, i, 1.0), 0.0)).collect())
    }

    /// The single point `{p}`.
    pub fn point(p: &[f64]) -> Self {
        let dim = p.len();
        Self::raw(dim, vec![], (0..dim).map(|i| (unit(dim, i, 1.0), p[i])).collect())
    }

    /// `{x : x_i >= 0}` for the listed coordinates.
    pub fn nonneg(dim: usize, coords: &[usize]) -> Self {
        Self::raw(dim, coords.iter().map(|&i| (unit(dim, i, -1.0), 0.0)).collect(), vec![])
    }

    /// `{x : x_i <= 0}` for the listed coordinates.
    pub fn nonpos(dim: usize, coords: &[usize]) -> Self {
        Self::raw(dim, coords.iter().map(|&i| (unit(dim, i, 1.0), 0.0)).collect(), vec![])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn inequalities(&self) -> &[Row] {
        &self.inequalities
    }
    pub fn equalities(&self) -> &[Row] {
        &self.equalities
    }

    pub fn is_homogeneous(&self) -> bool {
        self.inequalities.iter().chain(self.equalities.iter()).all(|(_, b)| *b == 0.0)
    }

    /// LP-decided emptiness; the first verdict is cached.
    pub fn is_empty(&self, cfg: &Config) -> bool {
        *self.empty.get_or_init(|| {
            !lp::solve(&Lp::feasibility(self.dim, &self.inequalities, &self.equalities), cfg.tol_lp).is_feasible()
        })
    }

    pub fn contains(&self, x: &[f64], tol_mem: f64) -> bool {
        x.len() == self.dim
            && self.inequalities.iter().all(|(a, b)| linalg::dot(a, x) - b <= active_tol(*b, tol_mem))
            && self.equalities.iter().all(|(a, b)| (linalg::dot(a, x) - b).abs() <= active_tol(*b, tol_mem))
    }

    /// Indices of inequalities active at `x`.
    pub fn active_set(&self, x: &[f64], tol_mem: f64) -> Vec<usize> {
        self.inequalities
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| (linalg::dot(a, x) - b).abs() <= active_tol(*b, tol_mem))
            .map(|(i, _)| i)
            .collect()
    }

    /// `{w : a·w <= 0 (active a), e·w = 0}`.
    pub fn tangent_cone_at(&self, x: &[f64], tol_mem: f64) -> ConvexPolyhedron {
        let act = self.active_set(x, tol_mem);
        Self::raw(
            self.dim,
            act.iter().map(|&i| (self.inequalities[i].0.clone(), 0.0)).collect(),
            self.equalities.iter().map(|(a, _)| (a.clone(), 0.0)).collect(),
        )
    }

    pub fn intersect(&self, other: &ConvexPolyhedron) -> Result<ConvexPolyhedron> {
        check_dim("intersect", self.dim, other.dim)?;
        Ok(Self::raw(
            self.dim,
            self.inequalities.iter().chain(other.inequalities.iter()).cloned().collect(),
            self.equalities.iter().chain(other.equalities.iter()).cloned().collect(),
        ))
    }

    /// Adds constraints in place of copying.
    pub fn with_rows(&self, ineq: Vec<Row>, eq: Vec<Row>) -> ConvexPolyhedron {
        let mut i = self.inequalities.clone();
        i.extend(ineq);
        let mut e = self.equalities.clone();
        e.extend(eq);
        Self::raw(self.dim, i, e)
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &ConvexPolyhedron) -> ConvexPolyhedron {
        let d = self.dim + other.dim;
        let a = self.embed(d, &(0..self.dim).collect::<Vec<_>>());
        let b = other.embed(d, &(self.dim..d).collect::<Vec<_>>());
        a.intersect(&b).expect("same dimension")
    }

    /// Views the polyhedron as constraints on coordinates `coords` of `ℝ^total`.
    pub fn embed(&self, total: usize, coords: &[usize]) -> ConvexPolyhedron {
        let lift = |a: &[f64]| {
            let mut v = vec![0.0; total];
            for (k, &c) in coords.iter().enumerate() {
                v[c] = a[k];
            }
            v
        };
        Self::raw(
            total,
            self.inequalities.iter().map(|(a, b)| (lift(a), *b)).collect(),
            self.equalities.iter().map(|(a, b)| (lift(a), *b)).collect(),
        )
    }

    /// `{x : M x + c ∈ self}`.
    pub fn preimage_affine(&self, m: &Mat, c: &[f64]) -> Result<ConvexPolyhedron> {
        check_dim("preimage rows", self.dim, m.nrows())?;
        check_dim("preimage offset", self.dim, c.len())?;
        let map = |(a, b): &Row| -> Row { (linalg::mat_t_vec(m, a), b - linalg::dot(a, c)) };
        Ok(Self::raw(
            m.ncols(),
            self.inequalities.iter().map(map).collect(),
            self.equalities.iter().map(map).collect(),
        ))
    }

    /// Projection onto `keep`; `None` for an empty result.
    pub fn project(&self, keep: &[usize], cfg: &Config) -> Option<ConvexPolyhedron> {
        if keep.is_empty() {
            return None;
        }
        let sys = fm::System { dim: self.dim, ineq: self.inequalities.clone(), eq: self.equalities.clone() };
        let out = fm::project(sys, keep, cfg.tol_mem, cfg.tol_lp)?;
        Some(Self::raw(keep.len(), out.ineq, out.eq))
    }

    /// `{M x : x ∈ self}`.
    pub fn image(&self, m: &Mat, cfg: &Config) -> Result<Option<ConvexPolyhedron>> {
        check_dim("image columns", self.dim, m.ncols())?;
        let (k, n) = (m.nrows(), self.dim);
        // variables (y, x) with y - M x = 0
        let lifted = self.embed(k + n, &(k..k + n).collect::<Vec<_>>());
        let eqs: Vec<Row> = (0..k)
            .map(|r| {
                let mut v = vec![0.0; k + n];
                v[r] = 1.0;
                for j in 0..n {
                    v[k + j] = -m[(r, j)];
                }
                (v, 0.0)
            })
            .collect();
        Ok(lifted.with_rows(vec![], eqs).project(&(0..k).collect::<Vec<_>>(), cfg))
    }

    /// Canonical form without redundant inequalities; `None` when empty.
    pub fn simplified(&self, cfg: &Config) -> Option<ConvexPolyhedron> {
        let sys = fm::System { dim: self.dim, ineq: self.inequalities.clone(), eq: self.equalities.clone() };
        let sys = sys.tidy(cfg.tol_mem)?.remove_redundant(cfg.tol_mem, cfg.tol_lp)?;
        Some(Self::raw(self.dim, sys.ineq, sys.eq))
    }

    pub fn maximize(&self, c: &[f64], cfg: &Config) -> LpOutcome {
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let lp = Lp {
            dim: self.dim,
            objective: Some(&neg),
            ineq: &self.inequalities,
            eq: &self.equalities,
            extra_ineq: &[],
            extra_eq: &[],
        };
        match lp::solve(&lp, cfg.tol_lp) {
            LpOutcome::Optimal { x, value } => LpOutcome::Optimal { x, value: -value },
            o => o,
        }
    }

    /// Convex containment `self ⊂ other`, one LP per row of `other`.
    pub fn subset_of(&self, other: &ConvexPolyhedron, cfg: &Config) -> bool {
        if self.dim != other.dim {
            return false;
        }
        if self.is_empty(cfg) {
            return true;
        }
        let tol = |b: f64| cfg.tol_eq * (1.0 + b.abs());
        for (a, b) in &other.inequalities {
            match self.maximize(a, cfg) {
                LpOutcome::Optimal { value, .. } if value <= b + tol(*b) => {}
                _ => return false,
            }
        }
        for (a, b) in &other.equalities {
            let up = self.maximize(a, cfg);
            let neg: Vec<f64> = a.iter().map(|v| -v).collect();
            let down = self.maximize(&neg, cfg);
            match (up, down) {
                (LpOutcome::Optimal { value: u, .. }, LpOutcome::Optimal { value: d, .. })
                    if (u - b).abs() <= tol(*b) && (-d - b).abs() <= tol(*b) => {}
                _ => return false,
            }
        }
        true
    }

    pub fn project_point(&self, p: &[f64], cfg: &Config) -> Option<Vec<f64>> {
        qp::project(p, &self.inequalities, &self.equalities, cfg.tol_lp)
    }

    pub fn distance(&self, p: &[f64], cfg: &Config) -> f64 {
        qp::distance(p, &self.inequalities, &self.equalities, cfg.tol_lp)
    }

    /// Any point of the polyhedron.
    pub fn some_point(&self, cfg: &Config) -> Option<Vec<f64>> {
        lp::solve(&Lp::feasibility(self.dim, &self.inequalities, &self.equalities), cfg.tol_lp)
            .point()
            .map(|p| p.to_vec())
    }
}

impl ConvexPolyhedron {
    /// A recession direction `r` with `s·r_j = 1`, if one exists.
    pub(crate) fn recession_witness(&self, j: usize, s: f64, cfg: &Config) -> Option<Vec<f64>> {
        let rec = zero_offsets(self.clone());
        let extra = vec![(unit(self.dim, j, s), 1.0)];
        let lp = Lp { dim: self.dim, objective: None, ineq: &rec.inequalities, eq: &rec.equalities, extra_ineq: &[], extra_eq: &extra };
        lp::solve(&lp, cfg.tol_lp).point().map(|x| x.to_vec())
    }

    /// Recession cone `{r : a·r <= 0, e·r = 0}`.
    pub fn recession_cone(&self) -> ConvexPolyhedron {
        zero_offsets(self.clone())
    }

    /// Affine hull `{x : M x = c}` from the explicit and implied equalities.
    pub fn affine_hull(&self, cfg: &Config) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let implied = self.closure(&[], cfg)?;
        let rows: Vec<&Row> = self.equalities.iter().chain(implied.iter().map(|&i| &self.inequalities[i])).collect();
        Some((rows.iter().map(|r| r.0.clone()).collect(), rows.iter().map(|r| r.1).collect()))
    }

    /// `inf ‖x‖` and `sup ‖x‖` over the polyhedron; `None` when empty.
    pub fn norm_range(&self, cfg: &Config) -> Result<Option<(f64, f64)>> {
        let Some(p) = self.project_point(&vec![0.0; self.dim], cfg) else {
            return Ok(None);
        };
        let lo = linalg::norm(&p);
        if self.recession_cone().nonzero_point_convex(cfg) {
            return Ok(Some((lo, f64::INFINITY)));
        }
        // bounded: the maximum of a convex function sits at a vertex
        let mut hi: f64 = lo;
        for active in self.faces(cfg)? {
            let f = self.face(&active);
            if let Some((m, _)) = f.affine_hull(cfg) {
                let mm = linalg::mat_from_rows(&m, self.dim);
                if linalg::rank(&mm) == self.dim {
                    if let Some(x) = f.some_point(cfg) {
                        hi = hi.max(linalg::norm(&x));
                    }
                }
            }
        }
        Ok(Some((lo, hi)))
    }

    fn nonzero_point_convex(&self, cfg: &Config) -> bool {
        piece_nonzero_witness(self, cfg).is_some()
    }
}

pub(crate) fn unit(dim: usize, i: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = s;
    v
}

/// A finite union of convex polyhedra of a common dimension. The empty list is the empty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralSet {
    dim: usize,
    pieces: Vec<ConvexPolyhedron>,
}

impl PolyhedralSet {
    pub fn new(dim: usize, pieces: Vec<ConvexPolyhedron>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("set dimension must be positive".into()));
        }
        for p in &pieces {
            check_dim("union piece", dim, p.dim)?;
        }
        Ok(PolyhedralSet { dim, pieces })
    }

    pub fn empty(dim: usize) -> Self {
        PolyhedralSet { dim, pieces: vec![] }
    }

    pub fn from_piece(p: ConvexPolyhedron) -> Self {
        PolyhedralSet { dim: p.dim, pieces: vec![p] }
    }

    pub fn universe(dim: usize) -> Self {
        Self::from_piece(ConvexPolyhedron::universe(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn pieces(&self) -> &[ConvexPolyhedron] {
        &self.pieces
    }

    pub fn is_convex(&self) -> bool {
        self.pieces.len() <= 1
    }

    pub fn union(&self, other: &PolyhedralSet) -> Result<PolyhedralSet> {
        check_dim("union", self.dim, other.dim)?;
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        Ok(PolyhedralSet { dim: self.dim, pieces })
    }

    pub fn is_empty(&self, cfg: &Config) -> bool {
        self.pieces.iter().all(|p| p.is_empty(cfg))
    }

    /// Drops empty pieces.
    pub fn pruned(&self, cfg: &Config) -> PolyhedralSet {
        PolyhedralSet { dim: self.dim, pieces: self.pieces.iter().filter(|p| !p.is_empty(cfg)).cloned().collect() }
    }

    pub fn contains(&self, x: &[f64], tol_mem: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(x, tol_mem))
    }

    /// Minimum over pieces of the QP distance; `+inf` for the empty set.
    pub fn distance(&self, x: &[f64], cfg: &Config) -> f64 {
        self.pieces.iter().map(|p| p.distance(x, cfg)).fold(f64::INFINITY, f64::min)
    }

    pub fn project_point(&self, x: &[f64], cfg: &Config) -> Option<Vec<f64>> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for p in &self.pieces {
            if let Some(q) = p.project_point(x, cfg) {
                let d = linalg::norm(&linalg::sub(x, &q));
                if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                    best = Some((d, q));
                }
            }
        }
        best.map(|(_, q)| q)
    }

    pub fn product(&self, other: &PolyhedralSet) -> PolyhedralSet {
        let mut pieces = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                pieces.push(a.product(b));
            }
        }
        PolyhedralSet { dim: self.dim + other.dim, pieces }
    }

    pub fn intersect(&self, other: &PolyhedralSet, cfg: &Config) -> Result<PolyhedralSet> {
        check_dim("intersect", self.dim, other.dim)?;
        let mut pieces = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                let p = a.intersect(b)?;
                if !p.is_empty(cfg) {
                    pieces.push(p);
                }
            }
        }
        Ok(PolyhedralSet { dim: self.dim, pieces })
    }

    pub fn embed(&self, total: usize, coords: &[usize]) -> PolyhedralSet {
        PolyhedralSet { dim: total, pieces: self.pieces.iter().map(|p| p.embed(total, coords)).collect() }
    }

    pub fn preimage_affine(&self, m: &Mat, c: &[f64]) -> Result<PolyhedralSet> {
        let pieces = self.pieces.iter().map(|p| p.preimage_affine(m, c)).collect::<Result<Vec<_>>>()?;
        Ok(PolyhedralSet { dim: m.ncols(), pieces })
    }

    pub fn project(&self, keep: &[usize], cfg: &Config) -> PolyhedralSet {
        PolyhedralSet {
            dim: keep.len(),
            pieces: self.pieces.iter().filter_map(|p| p.project(keep, cfg)).collect(),
        }
    }

    pub fn image(&self, m: &Mat, cfg: &Config) -> Result<PolyhedralSet> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            if let Some(q) = p.image(m, cfg)? {
                pieces.push(q);
            }
        }
        Ok(PolyhedralSet { dim: m.nrows(), pieces })
    }

    /// `{a + b : a ∈ self, b ∈ other}`, one projection per pair of pieces.
    pub fn minkowski_sum(&self, other: &PolyhedralSet, cfg: &Config) -> Result<PolyhedralSet> {
        check_dim("minkowski sum", self.dim, other.dim)?;
        let n = self.dim;
        let eqs: Vec<Row> = (0..n)
            .map(|i| {
                let mut v = vec![0.0; 3 * n];
                v[i] = 1.0;
                v[n + i] = -1.0;
                v[2 * n + i] = -1.0;
                (v, 0.0)
            })
            .collect();
        let mut pieces = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                let pa = a.embed(3 * n, &(n..2 * n).collect::<Vec<_>>());
                let pb = b.embed(3 * n, &(2 * n..3 * n).collect::<Vec<_>>());
                let joint = pa.intersect(&pb)?.with_rows(vec![], eqs.clone());
                if let Some(q) = joint.project(&(0..n).collect::<Vec<_>>(), cfg) {
                    pieces.push(q);
                }
            }
        }
        Ok(PolyhedralSet { dim: n, pieces })
    }

    /// A point of the set other than the origin.
    pub fn nonzero_point(&self, cfg: &Config) -> Option<Vec<f64>> {
        let tol = cfg.tol_eq;
        for p in &self.pieces {
            for j in 0..self.dim {
                for s in [1.0, -1.0] {
                    match p.maximize(&unit(self.dim, j, s), cfg) {
                        LpOutcome::Optimal { x, value } if value > tol => return Some(x),
                        LpOutcome::Unbounded { x } => {
                            // move along the unbounded ray until the coordinate is clearly nonzero
                            let mut y = x.clone();
                            if y[j].abs() <= tol {
                                if let Some(r) = p.recession_witness(j, s, cfg) {
                                    y = linalg::add(&y, &r);
                                }
                            }
                            return Some(y);
                        }
                        _ => {}
                    }
                }
            }
        }
        None
    }

    /// True if every piece is a cone (all offsets zero).
    pub fn is_conic(&self) -> bool {
        self.pieces.iter().all(|p| p.is_homogeneous())
    }

    /// `{b : (a, b) ∈ self}` for the leading coordinates fixed to `a`.
    pub fn section(&self, a: &[f64]) -> Result<PolyhedralSet> {
        let k = a.len();
        if k >= self.dim {
            return Err(Error::DimensionMismatch { context: "section".into(), expected: self.dim - 1, found: k });
        }
        let rest = self.dim - k;
        let m = Mat::from_fn(self.dim, rest, |r, c| if r == k + c { 1.0 } else { 0.0 });
        let mut off = a.to_vec();
        off.resize(self.dim, 0.0);
        self.preimage_affine(&m, &off)
    }

    /// Closed conic hull `cl ⋃_i ℝ₊ P_i`, one homogenized projection per nonempty piece.
    pub fn conic_hull(&self, cfg: &Config) -> PolyhedralCone {
        let n = self.dim;
        let mut pieces = Vec::new();
        for p in &self.pieces {
            if p.is_empty(cfg) {
                continue;
            }
            // (x, t) with a·x <= t b, t >= 0
            let hom = |(a, b): &Row| -> Row {
                let mut v = a.clone();
                v.push(-b);
                (v, 0.0)
            };
            let mut ineq: Vec<Row> = p.inequalities.iter().map(hom).collect();
            ineq.push((unit(n + 1, n, -1.0), 0.0));
            let eq: Vec<Row> = p.equalities.iter().map(hom).collect();
            let lifted = ConvexPolyhedron::raw(n + 1, ineq, eq);
            if let Some(q) = lifted.project(&(0..n).collect::<Vec<_>>(), cfg) {
                pieces.push(zero_offsets(q));
            }
        }
        if pieces.is_empty() {
            return PolyhedralCone::zero(n);
        }
        PolyhedralCone(PolyhedralSet { dim: n, pieces }).deduplicated(cfg)
    }

    /// Tangent cone at `point`: union of tangent cones of the pieces containing it.
    pub fn tangent_cone(&self, point: &[f64], cfg: &Config) -> Result<PolyhedralCone> {
        check_dim("tangent cone point", self.dim, point.len())?;
        let pieces: Vec<ConvexPolyhedron> = self
            .pieces
            .iter()
            .filter(|p| p.contains(point, cfg.tol_mem))
            .map(|p| p.tangent_cone_at(point, cfg.tol_mem))
            .collect();
        if pieces.is_empty() {
            return Err(Error::PointNotInSet);
        }
        PolyhedralCone::new(PolyhedralSet { dim: self.dim, pieces }).map(|c| c.deduplicated(cfg))
    }
}

/// A finite union of convex polyhedral cones with zero offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralCone(PolyhedralSet);

impl std::ops::Deref for PolyhedralCone {
    type Target = PolyhedralSet;
    fn deref(&self) -> &PolyhedralSet {
        &self.0
    }
}

impl PolyhedralCone {
    pub fn new(set: PolyhedralSet) -> Result<Self> {
        for p in &set.pieces {
            for (_, b) in p.inequalities.iter().chain(p.equalities.iter()) {
                if *b != 0.0 {
                    return Err(Error::NonzeroOffset(*b));
                }
            }
        }
        Ok(PolyhedralCone(set))
    }

    pub fn from_piece(p: ConvexPolyhedron) -> Result<Self> {
        Self::new(PolyhedralSet::from_piece(p))
    }

    pub fn zero(dim: usize) -> Self {
        PolyhedralCone(PolyhedralSet::from_piece(ConvexPolyhedron::origin(dim)))
    }

    pub fn full(dim: usize) -> Self {
        PolyhedralCone(PolyhedralSet::universe(dim))
    }

    /// Cone generated by `rays` (nonnegative combinations) and `lines` (arbitrary combinations).
    pub fn generated_by(dim: usize, rays: &[Vec<f64>], lines: &[Vec<f64>], cfg: &Config) -> Result<Self> {
        let k = rays.len() + lines.len();
        if k == 0 {
            return Ok(Self::zero(dim));
        }
        let total = dim + k;
        let mut eq = Vec::new();
        for i in 0..dim {
            let mut v = vec![0.0; total];
            v[i] = 1.0;
            for (j, g) in rays.iter().chain(lines.iter()).enumerate() {
                check_dim("generator", dim, g.len())?;
                v[dim + j] = -g[i];
            }
            eq.push((v, 0.0));
        }
        let ineq = (0..rays.len()).map(|j| (unit(total, dim + j, -1.0), 0.0)).collect();
        let lifted = ConvexPolyhedron::raw(total, ineq, eq);
        let p = lifted.project(&(0..dim).collect::<Vec<_>>(), cfg).unwrap_or_else(|| ConvexPolyhedron::origin(dim));
        Self::from_piece(zero_offsets(p))
    }

    pub fn as_set(&self) -> &PolyhedralSet {
        &self.0
    }

    pub fn into_set(self) -> PolyhedralSet {
        self.0
    }

    /// Polar cone: the intersection of the piece polars.
    pub fn polar(&self, cfg: &Config) -> PolyhedralCone {
        let dim = self.dim;
        let mut acc = ConvexPolyhedron::universe(dim);
        for p in &self.pieces {
            let rays: Vec<Vec<f64>> = p.inequalities.iter().map(|(a, _)| a.clone()).collect();
            let lines: Vec<Vec<f64>> = p.equalities.iter().map(|(a, _)| a.clone()).collect();
            let q = Self::generated_by(dim, &rays, &lines, cfg).expect("dimensions agree");
            acc = acc.intersect(&q.pieces[0]).expect("dimensions agree");
        }
        let acc = acc.simplified(cfg).map(zero_offsets).unwrap_or_else(|| ConvexPolyhedron::origin(dim));
        PolyhedralCone(PolyhedralSet::from_piece(acc))
    }

    /// A nonzero point of the cone, if one exists.
    pub fn nonzero_witness(&self, cfg: &Config) -> Option<Vec<f64>> {
        for p in &self.pieces {
            if let Some(x) = piece_nonzero_witness(p, cfg) {
                return Some(x);
            }
        }
        None
    }

    /// A point of the cone with a nonzero coordinate among `coords`.
    pub fn nonzero_witness_in(&self, coords: &[usize], cfg: &Config) -> Option<Vec<f64>> {
        self.pieces.iter().find_map(|p| piece_witness_in(p, coords, cfg))
    }

    /// True iff the cone is `{0}`.
    pub fn is_trivial(&self, cfg: &Config) -> bool {
        self.nonzero_witness(cfg).is_none()
    }

    pub fn contains_point(&self, x: &[f64], cfg: &Config) -> bool {
        let s = linalg::norm_inf(x).max(1.0);
        let y = linalg::scale(x, 1.0 / s);
        self.0.contains(&y, cfg.tol_mem)
    }

    pub fn linear_image(&self, m: &Mat, cfg: &Config) -> Result<PolyhedralCone> {
        let img = self.0.image(m, cfg)?;
        Ok(PolyhedralCone(map_pieces(img, zero_offsets)).deduplicated(cfg))
    }

    pub fn linear_preimage(&self, m: &Mat) -> Result<PolyhedralCone> {
        let c = vec![0.0; m.nrows()];
        Ok(PolyhedralCone(self.0.preimage_affine(m, &c)?))
    }

    pub fn sum(&self, other: &PolyhedralCone, cfg: &Config) -> Result<PolyhedralCone> {
        check_dim("cone sum", self.dim, other.dim)?;
        let n = self.dim;
        // variables (y, a, b): y = a + b
        let eqs: Vec<Row> = (0..n)
            .map(|i| {
                let mut v = vec![0.0; 3 * n];
                v[i] = 1.0;
                v[n + i] = -1.0;
                v[2 * n + i] = -1.0;
                (v, 0.0)
            })
            .collect();
        let mut pieces = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                let pa = a.embed(3 * n, &(n..2 * n).collect::<Vec<_>>());
                let pb = b.embed(3 * n, &(2 * n..3 * n).collect::<Vec<_>>());
                let joint = pa.intersect(&pb)?.with_rows(vec![], eqs.clone());
                if let Some(q) = joint.project(&(0..n).collect::<Vec<_>>(), cfg) {
                    pieces.push(zero_offsets(q));
                }
            }
        }
        Ok(PolyhedralCone(PolyhedralSet { dim: n, pieces }).deduplicated(cfg))
    }

    pub fn intersect(&self, other: &PolyhedralCone, cfg: &Config) -> Result<PolyhedralCone> {
        Ok(PolyhedralCone(self.0.intersect(&other.0, cfg)?))
    }

    pub fn project(&self, keep: &[usize], cfg: &Config) -> PolyhedralCone {
        let p = self.0.project(keep, cfg);
        let dim = keep.len();
        let mut out = PolyhedralCone(map_pieces(p, zero_offsets));
        if out.pieces.is_empty() {
            out = PolyhedralCone::zero(dim);
        }
        out.deduplicated(cfg)
    }

    pub fn product(&self, other: &PolyhedralCone) -> PolyhedralCone {
        PolyhedralCone(self.0.product(&other.0))
    }

    pub fn embed(&self, total: usize, coords: &[usize]) -> PolyhedralCone {
        PolyhedralCone(self.0.embed(total, coords))
    }

    pub fn negated(&self) -> PolyhedralCone {
        let m = Mat::identity(self.dim, self.dim) * -1.0;
        self.linear_preimage(&m).expect("square")
    }

    /// Removes pieces contained in another piece.
    pub fn deduplicated(mut self, cfg: &Config) -> PolyhedralCone {
        let pieces = std::mem::take(&mut self.0.pieces);
        let mut keep: Vec<ConvexPolyhedron> = Vec::new();
        'outer: for p in pieces {
            if p.is_empty(cfg) {
                continue;
            }
            for k in keep.iter() {
                if p.subset_of(k, cfg) {
                    continue 'outer;
                }
            }
            keep.retain(|k| !k.subset_of(&p, cfg));
            keep.push(p);
        }
        if keep.is_empty() {
            keep.push(ConvexPolyhedron::origin(self.0.dim));
        }
        self.0.pieces = keep;
        self
    }

    /// Exact union containment `self ⊂ other`, up to `tol_eq`.
    pub fn subset_of(&self, other: &PolyhedralCone, cfg: &Config) -> bool {
        if self.dim != other.dim {
            return false;
        }
        self.pieces.iter().all(|p| strict_cell_covered(p, &[], &other.pieces, cfg))
    }

    pub fn set_eq(&self, other: &PolyhedralCone, cfg: &Config) -> bool {
        self.subset_of(other, cfg) && other.subset_of(self, cfg)
    }
}

fn map_pieces(s: PolyhedralSet, f: impl Fn(ConvexPolyhedron) -> ConvexPolyhedron) -> PolyhedralSet {
    PolyhedralSet { dim: s.dim, pieces: s.pieces.into_iter().map(f).collect() }
}

/// Forces offsets of a homogeneous system to exact zero after floating-point elimination.
fn zero_offsets(p: ConvexPolyhedron) -> ConvexPolyhedron {
    let ineq = p.inequalities.into_iter().map(|(a, _)| (a, 0.0)).collect();
    let eq = p.equalities.into_iter().map(|(a, _)| (a, 0.0)).collect();
    ConvexPolyhedron::raw(p.dim, ineq, eq)
}

fn piece_nonzero_witness(p: &ConvexPolyhedron, cfg: &Config) -> Option<Vec<f64>> {
    piece_witness_in(p, &(0..p.dim).collect::<Vec<_>>(), cfg)
}

fn piece_witness_in(p: &ConvexPolyhedron, coords: &[usize], cfg: &Config) -> Option<Vec<f64>> {
    for &j in coords {
        for s in [1.0, -1.0] {
            let extra = vec![(unit(p.dim, j, s), 1.0)];
            let lp = Lp {
                dim: p.dim,
                objective: None,
                ineq: &p.inequalities,
                eq: &p.equalities,
                extra_ineq: &[],
                extra_eq: &extra,
            };
            if let Some(x) = lp::solve(&lp, cfg.tol_lp).point() {
                return Some(x.to_vec());
            }
        }
    }
    None
}

/// Is `piece ∩ {s·x > 0 for s in strict}` covered by the union of `cover`?
fn strict_cell_covered(piece: &ConvexPolyhedron, strict: &[Vec<f64>], cover: &[ConvexPolyhedron], cfg: &Config) -> bool {
    let bound = 1.0 / cfg.tol_eq;
    let cell_nonempty = |extra: &[Vec<f64>]| -> bool {
        let mut ineq: Vec<Row> = piece.inequalities.clone();
        for s in extra {
            ineq.push((s.iter().map(|v| -v).collect(), -1.0));
        }
        for j in 0..piece.dim {
            ineq.push((unit(piece.dim, j, 1.0), bound));
            ineq.push((unit(piece.dim, j, -1.0), bound));
        }
        lp::solve(&Lp::feasibility(piece.dim, &ineq, &piece.equalities), cfg.tol_lp).is_feasible()
    };
    if strict.is_empty() {
        // the origin is in every cone; only nonzero points matter
        if piece_nonzero_witness(piece, cfg).is_none() {
            return true;
        }
    } else if !cell_nonempty(strict) {
        return true;
    }
    let Some((first, rest)) = cover.split_first() else {
        return false;
    };
    // cell \ first = union over violated rows of first
    let mut branches: Vec<Vec<f64>> = first.inequalities.iter().map(|(a, _)| a.clone()).collect();
    for (e, _) in &first.equalities {
        branches.push(e.clone());
        branches.push(e.iter().map(|v| -v).collect());
    }
    if strict.is_empty() {
        // nonzero part of the piece; strictness is enforced branch by branch
        if branches.is_empty() {
            return true;
        }
        return branches.iter().all(|b| strict_cell_covered(piece, &[b.clone()], rest, cfg));
    }
    branches.iter().all(|b| {
        let mut s = strict.to_vec();
        s.push(b.clone());
        strict_cell_covered(piece, &s, rest, cfg)
    })
}

/// Tangent cone to a union at a point.
pub fn tangent_cone(set: &PolyhedralSet, point: &[f64], cfg: &Config) -> Result<PolyhedralCone> {
    set.tangent_cone(point, cfg)
}

/// Classical normal cone of a convex piece: the polar of its tangent cone.
pub fn normal_cone_convex(piece: &ConvexPolyhedron, point: &[f64], cfg: &Config) -> Result<PolyhedralCone> {
    check_dim("normal cone point", piece.dim, point.len())?;
    if !piece.contains(point, cfg.tol_mem) {
        return Err(Error::PointNotInSet);
    }
    let t = piece.tangent_cone_at(point, cfg.tol_mem);
    let rays: Vec<Vec<f64>> = t.inequalities.iter().map(|(a, _)| a.clone()).collect();
    let lines: Vec<Vec<f64>> = t.equalities.iter().map(|(a, _)| a.clone()).collect();
    PolyhedralCone::generated_by(piece.dim, &rays, &lines, cfg)
}

pub fn polar(cone: &PolyhedralCone, cfg: &Config) -> PolyhedralCone {
    cone.polar(cfg)
}

pub fn cone_is_trivial(cone: &PolyhedralCone, cfg: &Config) -> bool {
    cone.is_trivial(cfg)
}

pub fn distance_to_set(point: &[f64], set: &PolyhedralSet, cfg: &Config) -> f64 {
    set.distance(point, cfg)
}
