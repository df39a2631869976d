//! Structured set-valued mappings and positively homogeneous piecewise maps.
//!
//! A [`StructuredMapping`] is built from polyhedral graphs, indicators,
//! constant sets, products and smooth-plus sums. Graphs are materialized only
//! when every smooth part is affine; otherwise analysis is pointwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat};
use crate::polyhedra::{normal_cone_convex, ConvexPolyhedron, PolyhedralCone, PolyhedralSet, Row};
use crate::smoothmaps::{PolyMap, SmoothMap};
use crate::Config;

const MANIFOLD_TOL: f64 = 1e-8;
const NEWTON_ITERS: usize = 60;

/// A closed set: a finite union of polyhedra or a zero set `{x : h(x) = 0}`.
///
/// Normal and tangent cones of a zero set are taken at points where `∇h` has
/// full column rank.
#[derive(Debug, Clone)]
pub enum ClosedSet {
    Polyhedral(PolyhedralSet),
    Manifold { h: PolyMap },
}

impl ClosedSet {
    pub fn dim(&self) -> usize {
        match self {
            ClosedSet::Polyhedral(p) => p.dim(),
            ClosedSet::Manifold { h } => h.in_dim(),
        }
    }

    pub fn as_polyhedral(&self) -> Option<&PolyhedralSet> {
        match self {
            ClosedSet::Polyhedral(p) => Some(p),
            ClosedSet::Manifold { .. } => None,
        }
    }

    pub fn contains(&self, x: &[f64], cfg: &Config) -> bool {
        match self {
            ClosedSet::Polyhedral(p) => p.contains(x, cfg.tol_mem),
            ClosedSet::Manifold { h } => match h.evaluate(x) {
                Ok(v) => linalg::norm_inf(&v) <= MANIFOLD_TOL * (1.0 + linalg::norm_inf(x)),
                Err(_) => false,
            },
        }
    }

    // ∇h(x) with the full-rank check
    fn regular_gradient(h: &PolyMap, x: &[f64]) -> Result<Mat> {
        let g = h.jacobian(x)?;
        if linalg::rank(&g) < g.ncols() {
            return Err(Error::NormalConeUnavailable);
        }
        Ok(g)
    }

    /// Limiting normal cone; `rge ∇h(x)` for a zero set.
    pub fn normal_cone(&self, x: &[f64], cfg: &Config) -> Result<PolyhedralCone> {
        check_dim("normal cone point", self.dim(), x.len())?;
        if !self.contains(x, cfg) {
            return Err(Error::PointNotInSet);
        }
        match self {
            ClosedSet::Polyhedral(p) => crate::polyhedra::limiting_normal_cone(p, x, cfg),
            ClosedSet::Manifold { h } => {
                let g = Self::regular_gradient(h, x)?;
                // v ⊥ ker ∇hᵀ
                let t = linalg::null_space(&g.transpose());
                subspace_cone(&t.transpose(), x.len())
            }
        }
    }

    /// Tangent cone; `ker ∇h(x)ᵀ` for a zero set.
    pub fn tangent_cone(&self, x: &[f64], cfg: &Config) -> Result<PolyhedralCone> {
        check_dim("tangent cone point", self.dim(), x.len())?;
        if !self.contains(x, cfg) {
            return Err(Error::PointNotInSet);
        }
        match self {
            ClosedSet::Polyhedral(p) => p.tangent_cone(x, cfg),
            ClosedSet::Manifold { h } => {
                let g = Self::regular_gradient(h, x)?;
                subspace_cone(&g.transpose(), x.len())
            }
        }
    }

    /// Nearest point; local (Newton plus tangential correction) for zero sets.
    pub fn project(&self, x: &[f64], cfg: &Config) -> Result<Vec<f64>> {
        check_dim("projection point", self.dim(), x.len())?;
        match self {
            ClosedSet::Polyhedral(p) => p.project_point(x, cfg).ok_or(Error::PointNotInSet),
            ClosedSet::Manifold { h } => project_zero_set(h, x),
        }
    }

    /// `ℝⁿ × self`.
    pub fn with_universe_left(&self, n: usize) -> ClosedSet {
        match self {
            ClosedSet::Polyhedral(p) => ClosedSet::Polyhedral(PolyhedralSet::universe(n).product(p)),
            ClosedSet::Manifold { h } => {
                let d = h.in_dim();
                ClosedSet::Manifold { h: h.embed_inputs(n + d, &(n..n + d).collect::<Vec<_>>()) }
            }
        }
    }

    /// `self × {0}` in `ℝ^{dim+m}`.
    pub fn with_zero_right(&self, m: usize) -> ClosedSet {
        match self {
            ClosedSet::Polyhedral(p) => ClosedSet::Polyhedral(p.product(&ConvexPolyhedron::origin(m).into())),
            ClosedSet::Manifold { h } => {
                let d = h.in_dim();
                let base = h.embed_inputs(d + m, &(0..d).collect::<Vec<_>>());
                let pick = Mat::from_fn(m, d + m, |r, c| if c == d + r { 1.0 } else { 0.0 });
                let tail = PolyMap::affine(&pick, &vec![0.0; m]);
                ClosedSet::Manifold { h: base.stack(&tail).expect("same inputs") }
            }
        }
    }
}

impl From<ConvexPolyhedron> for PolyhedralSet {
    fn from(p: ConvexPolyhedron) -> Self {
        PolyhedralSet::from_piece(p)
    }
}

/// `{x : rows·x = 0}` as a cone.
fn subspace_cone(rows: &Mat, dim: usize) -> Result<PolyhedralCone> {
    let eq: Vec<Row> = linalg::rows_of(rows).into_iter().map(|r| (r, 0.0)).collect();
    PolyhedralCone::from_piece(ConvexPolyhedron::new(dim, vec![], eq)?)
}

fn project_zero_set(h: &PolyMap, x: &[f64]) -> Result<Vec<f64>> {
    let newton = |mut y: Vec<f64>| -> Result<Vec<f64>> {
        for _ in 0..NEWTON_ITERS {
            let r = h.evaluate(&y)?;
            if linalg::norm_inf(&r) <= 1e-14 * (1.0 + linalg::norm_inf(&y)) {
                break;
            }
            // minimal-norm step ∇h d = -r with ∇h of shape n × k
            let g = h.jacobian(&y)?;
            let step = linalg::lstsq(&g.transpose(), &linalg::scale(&r, -1.0));
            y = linalg::add(&y, &step);
        }
        Ok(y)
    };
    let mut y = newton(x.to_vec())?;
    for _ in 0..NEWTON_ITERS {
        let g = h.jacobian(&y)?;
        let t = linalg::null_space(&g.transpose());
        let d = linalg::sub(x, &y);
        let coef = linalg::mat_t_vec(&t, &d);
        let move_t = linalg::mat_vec(&t, &coef);
        if linalg::norm(&move_t) <= 1e-13 * (1.0 + linalg::norm(x)) {
            break;
        }
        y = newton(linalg::add(&y, &move_t))?;
    }
    let r = h.evaluate(&y)?;
    if !(linalg::norm_inf(&r) <= MANIFOLD_TOL) {
        return Err(Error::NonConvergent("zero-set projection".into()));
    }
    Ok(y)
}

/// A set-valued map `ℝ^in ⇒ ℝ^out` assembled from structural pieces.
#[derive(Debug, Clone)]
pub enum StructuredMapping {
    /// Graph given directly in `ℝ^{in+out}`.
    GraphPolyhedral { in_dim: usize, out_dim: usize, graph: PolyhedralSet },
    /// `Δ_Ω(x) = {0}` on `Ω`, empty elsewhere.
    Indicator { set: ClosedSet, out_dim: usize },
    /// `M(x) ≡ C₁`.
    ConstantSet { in_dim: usize, set: ClosedSet },
    /// `(x, u) ↦ R(x) × T(u)`.
    Product(Box<StructuredMapping>, Box<StructuredMapping>),
    /// `x ↦ F(x) + C(x)`.
    SmoothPlus { f: SmoothMap, c: Box<StructuredMapping> },
    /// `x ↦ N_{C₀}(x)` for a convex polyhedron `C₀`.
    NormalConeMap { set: ConvexPolyhedron },
}

impl StructuredMapping {
    pub fn indicator_polyhedral(set: PolyhedralSet, out_dim: usize) -> Self {
        StructuredMapping::Indicator { set: ClosedSet::Polyhedral(set), out_dim }
    }

    pub fn constant_polyhedral(in_dim: usize, set: PolyhedralSet) -> Self {
        StructuredMapping::ConstantSet { in_dim, set: ClosedSet::Polyhedral(set) }
    }

    pub fn product(r: StructuredMapping, t: StructuredMapping) -> Self {
        StructuredMapping::Product(Box::new(r), Box::new(t))
    }

    pub fn smooth_plus(f: impl Into<SmoothMap>, c: StructuredMapping) -> Result<Self> {
        let f = f.into();
        check_dim("smooth part inputs", c.in_dim(), f.in_dim())?;
        check_dim("smooth part outputs", c.out_dim(), f.out_dim())?;
        Ok(StructuredMapping::SmoothPlus { f, c: Box::new(c) })
    }

    pub fn in_dim(&self) -> usize {
        match self {
            StructuredMapping::GraphPolyhedral { in_dim, .. } => *in_dim,
            StructuredMapping::Indicator { set, .. } => set.dim(),
            StructuredMapping::ConstantSet { in_dim, .. } => *in_dim,
            StructuredMapping::Product(r, t) => r.in_dim() + t.in_dim(),
            StructuredMapping::SmoothPlus { c, .. } => c.in_dim(),
            StructuredMapping::NormalConeMap { set } => set.dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            StructuredMapping::GraphPolyhedral { out_dim, .. } => *out_dim,
            StructuredMapping::Indicator { out_dim, .. } => *out_dim,
            StructuredMapping::ConstantSet { set, .. } => set.dim(),
            StructuredMapping::Product(r, t) => r.out_dim() + t.out_dim(),
            StructuredMapping::SmoothPlus { c, .. } => c.out_dim(),
            StructuredMapping::NormalConeMap { set } => set.dim(),
        }
    }

    /// Checks internal dimensions; run on every mapping read from input.
    pub fn validate(&self) -> Result<()> {
        match self {
            StructuredMapping::GraphPolyhedral { in_dim, out_dim, graph } => {
                check_dim("graph dimension", in_dim + out_dim, graph.dim())
            }
            StructuredMapping::Indicator { out_dim, .. } => {
                if *out_dim == 0 {
                    return Err(Error::Validation("indicator output dimension must be positive".into()));
                }
                Ok(())
            }
            StructuredMapping::ConstantSet { in_dim, .. } => {
                if *in_dim == 0 {
                    return Err(Error::Validation("constant map input dimension must be positive".into()));
                }
                Ok(())
            }
            StructuredMapping::Product(r, t) => {
                r.validate()?;
                t.validate()
            }
            StructuredMapping::SmoothPlus { f, c } => {
                c.validate()?;
                check_dim("smooth part inputs", c.in_dim(), f.in_dim())?;
                check_dim("smooth part outputs", c.out_dim(), f.out_dim())
            }
            StructuredMapping::NormalConeMap { .. } => Ok(()),
        }
    }

    /// True when no smooth part is nonlinear and every set is polyhedral.
    pub fn is_polyhedral(&self) -> bool {
        match self {
            StructuredMapping::GraphPolyhedral { .. } | StructuredMapping::NormalConeMap { .. } => true,
            StructuredMapping::Indicator { set, .. } | StructuredMapping::ConstantSet { set, .. } => {
                set.as_polyhedral().is_some()
            }
            StructuredMapping::Product(r, t) => r.is_polyhedral() && t.is_polyhedral(),
            StructuredMapping::SmoothPlus { f, c } => f.as_poly().is_some_and(|p| p.is_affine()) && c.is_polyhedral(),
        }
    }

    /// Exact polyhedral graph in `ℝ^{in+out}`.
    pub fn graph(&self, cfg: &Config) -> Result<PolyhedralSet> {
        let (n, m) = (self.in_dim(), self.out_dim());
        match self {
            StructuredMapping::GraphPolyhedral { graph, .. } => Ok(graph.clone()),
            StructuredMapping::Indicator { set, out_dim } => {
                let s = set.as_polyhedral().ok_or_else(|| Error::NotPolyhedral("indicator of a zero set".into()))?;
                Ok(s.product(&ConvexPolyhedron::origin(*out_dim).into()))
            }
            StructuredMapping::ConstantSet { in_dim, set } => {
                let s = set.as_polyhedral().ok_or_else(|| Error::NotPolyhedral("constant zero set".into()))?;
                Ok(PolyhedralSet::universe(*in_dim).product(s))
            }
            StructuredMapping::Product(r, t) => {
                let (gr, gt) = (r.graph(cfg)?, t.graph(cfg)?);
                let (n1, m1, n2, m2) = (r.in_dim(), r.out_dim(), t.in_dim(), t.out_dim());
                // (x, y_R, u, y_T) -> (x, u, y_R, y_T)
                let coords: Vec<usize> = (0..n1)
                    .chain(n1 + n2..n1 + n2 + m1)
                    .chain(n1..n1 + n2)
                    .chain(n1 + n2 + m1..n1 + n2 + m1 + m2)
                    .collect();
                let prod = gr.product(&gt);
                Ok(permute_set(&prod, &coords))
            }
            StructuredMapping::SmoothPlus { f, c } => {
                let p = f
                    .as_poly()
                    .filter(|p| p.is_affine())
                    .ok_or_else(|| Error::NotPolyhedral("smooth part is not affine".into()))?;
                let gc = c.graph(cfg)?;
                let zero = vec![0.0; n];
                let off = p.evaluate(&zero)?;
                let jt = p.jacobian(&zero)?.transpose();
                // (x, y) ↦ (x, y - J x - c)
                let mut shear = Mat::identity(n + m, n + m);
                for r in 0..m {
                    for k in 0..n {
                        shear[(n + r, k)] = -jt[(r, k)];
                    }
                }
                let mut offset = vec![0.0; n];
                offset.extend(off.iter().map(|v| -v));
                gc.preimage_affine(&shear, &offset)
            }
            StructuredMapping::NormalConeMap { set } => normal_cone_graph(set, cfg),
        }
    }

    /// The graph as a closed set; zero sets survive indicators and constant maps.
    pub fn graph_set(&self, cfg: &Config) -> Result<ClosedSet> {
        match self {
            StructuredMapping::Indicator { set: s @ ClosedSet::Manifold { .. }, out_dim } => {
                Ok(s.with_zero_right(*out_dim))
            }
            StructuredMapping::ConstantSet { in_dim, set: s @ ClosedSet::Manifold { .. } } => {
                Ok(s.with_universe_left(*in_dim))
            }
            _ => Ok(ClosedSet::Polyhedral(self.graph(cfg)?)),
        }
    }

    /// Pointwise graph membership, valid for every variant.
    pub fn contains_graph(&self, x: &[f64], y: &[f64], cfg: &Config) -> bool {
        if x.len() != self.in_dim() || y.len() != self.out_dim() {
            return false;
        }
        let tol = |v: &[f64]| linalg::norm_inf(v) <= cfg.tol_mem;
        match self {
            StructuredMapping::GraphPolyhedral { graph, .. } => graph.contains(&[x, y].concat(), cfg.tol_mem),
            StructuredMapping::Indicator { set, .. } => set.contains(x, cfg) && tol(y),
            StructuredMapping::ConstantSet { set, .. } => set.contains(y, cfg),
            StructuredMapping::Product(r, t) => {
                let (n1, m1) = (r.in_dim(), r.out_dim());
                r.contains_graph(&x[..n1], &y[..m1], cfg) && t.contains_graph(&x[n1..], &y[m1..], cfg)
            }
            StructuredMapping::SmoothPlus { f, c } => match f.evaluate(x) {
                Ok(fx) => c.contains_graph(x, &linalg::sub(y, &fx), cfg),
                Err(_) => false,
            },
            StructuredMapping::NormalConeMap { set } => {
                set.contains(x, cfg.tol_mem)
                    && normal_cone_convex(set, x, cfg).is_ok_and(|k| k.contains_point(y, cfg))
            }
        }
    }

    /// `S(x)` as a polyhedral set (empty outside the domain).
    pub fn value_at(&self, x: &[f64], cfg: &Config) -> Result<PolyhedralSet> {
        check_dim("argument", self.in_dim(), x.len())?;
        let m = self.out_dim();
        match self {
            StructuredMapping::GraphPolyhedral { graph, .. } => graph.section(x),
            StructuredMapping::Indicator { set, out_dim } => Ok(if set.contains(x, cfg) {
                ConvexPolyhedron::origin(*out_dim).into()
            } else {
                PolyhedralSet::empty(*out_dim)
            }),
            StructuredMapping::ConstantSet { set, .. } => {
                set.as_polyhedral().cloned().ok_or_else(|| Error::NotPolyhedral("constant zero set".into()))
            }
            StructuredMapping::Product(r, t) => {
                let n1 = r.in_dim();
                Ok(r.value_at(&x[..n1], cfg)?.product(&t.value_at(&x[n1..], cfg)?))
            }
            StructuredMapping::SmoothPlus { f, c } => {
                let fx = f.evaluate(x)?;
                let neg: Vec<f64> = fx.iter().map(|v| -v).collect();
                c.value_at(x, cfg)?.preimage_affine(&Mat::identity(m, m), &neg)
            }
            StructuredMapping::NormalConeMap { set } => {
                if !set.contains(x, cfg.tol_mem) {
                    return Ok(PolyhedralSet::empty(m));
                }
                Ok(normal_cone_convex(set, x, cfg)?.into_set())
            }
        }
    }

    /// Nearest graph point (polyhedral graphs or zero-set graphs only).
    pub fn graph_projection(&self, xy: &[f64], cfg: &Config) -> Result<Vec<f64>> {
        self.graph_set(cfg)?.project(xy, cfg)
    }
}

/// Reorders coordinates: coordinate `k` of the input lands at `coords[k]`.
pub(crate) fn permute_set(set: &PolyhedralSet, coords: &[usize]) -> PolyhedralSet {
    set.embed(coords.len(), coords)
}

/// `gph N_{C₀} = ⋃_faces F × (cone of active normals + span of equalities)`.
fn normal_cone_graph(set: &ConvexPolyhedron, cfg: &Config) -> Result<PolyhedralSet> {
    let n = set.dim();
    let lines: Vec<Vec<f64>> = set.equalities().iter().map(|(a, _)| a.clone()).collect();
    let mut pieces = Vec::new();
    for active in set.faces(cfg)? {
        let rays: Vec<Vec<f64>> = active.iter().map(|&i| set.inequalities()[i].0.clone()).collect();
        let nc = PolyhedralCone::generated_by(n, &rays, &lines, cfg)?;
        let face = set.face(&active);
        for q in nc.pieces() {
            pieces.push(face.product(q));
        }
    }
    PolyhedralSet::new(2 * n, pieces)
}

/// A positively homogeneous map `z ↦ K(z)` with a conic polyhedral graph in `ℝ^{arg+val}`.
#[derive(Debug, Clone)]
pub struct HomogeneousPiecewiseMap {
    pub arg_dim: usize,
    pub val_dim: usize,
    pub graph: PolyhedralCone,
}

impl HomogeneousPiecewiseMap {
    pub fn new(arg_dim: usize, val_dim: usize, graph: PolyhedralCone) -> Result<Self> {
        check_dim("homogeneous graph", arg_dim + val_dim, graph.dim())?;
        Ok(HomogeneousPiecewiseMap { arg_dim, val_dim, graph })
    }

    fn arg_coords(&self) -> Vec<usize> {
        (0..self.arg_dim).collect()
    }
    fn val_coords(&self) -> Vec<usize> {
        (self.arg_dim..self.arg_dim + self.val_dim).collect()
    }

    pub fn dom(&self, cfg: &Config) -> PolyhedralCone {
        self.graph.project(&self.arg_coords(), cfg)
    }

    /// `rge K` and whether a closure had to be taken. Projections of closed
    /// polyhedral cones are closed, so the flag is always false here.
    pub fn rge(&self, cfg: &Config) -> (PolyhedralCone, bool) {
        (self.graph.project(&self.val_coords(), cfg), false)
    }

    /// `K⁻¹(0)`.
    pub fn kernel(&self, cfg: &Config) -> Result<PolyhedralCone> {
        let (n, m) = (self.arg_dim, self.val_dim);
        let lift = Mat::from_fn(n + m, n, |r, c| if r == c { 1.0 } else { 0.0 });
        Ok(self.graph.linear_preimage(&lift)?.deduplicated(cfg))
    }

    /// `K(0)`.
    pub fn value_at_zero(&self, cfg: &Config) -> Result<PolyhedralCone> {
        let (n, m) = (self.arg_dim, self.val_dim);
        let lift = Mat::from_fn(n + m, m, |r, c| if r == n + c { 1.0 } else { 0.0 });
        Ok(self.graph.linear_preimage(&lift)?.deduplicated(cfg))
    }

    pub fn value_at(&self, z: &[f64]) -> Result<PolyhedralSet> {
        self.graph.section(z)
    }

    pub fn contains(&self, z: &[f64], eta: &[f64], cfg: &Config) -> bool {
        self.graph.contains_point(&[z, eta].concat(), cfg)
    }

    pub fn inverse(&self) -> HomogeneousPiecewiseMap {
        let (n, m) = (self.arg_dim, self.val_dim);
        let coords: Vec<usize> = (m..m + n).chain(0..m).collect();
        let g = PolyhedralCone::new(permute_set(self.graph.as_set(), &coords)).expect("conic");
        HomogeneousPiecewiseMap { arg_dim: m, val_dim: n, graph: g }
    }

    /// `d(0, K(z))`, `+inf` outside the domain.
    pub fn dist0(&self, z: &[f64], cfg: &Config) -> Result<f64> {
        Ok(self.value_at(z)?.distance(&vec![0.0; self.val_dim], cfg))
    }
}

/// What an osc probe compares sampled points against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscMode {
    /// `(z, η)` against the graph at `ξ̄`.
    Graph,
    /// `η/|η|` against the conic hull of the value at `ξ̄`.
    ConicHullInValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscCounterexample {
    pub xi: Vec<f64>,
    pub z: Vec<f64>,
    pub eta: Vec<f64>,
    pub distance: f64,
}

/// Outcome of the sampled outer-semicontinuity falsifier. Evidence only.
#[derive(Debug, Clone, PartialEq)]
pub struct OscEvidence {
    pub samples: usize,
    pub counterexample: Option<OscCounterexample>,
}

pub const OSC_DIRECTIONS: usize = 64;
pub const OSC_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const OSC_GAP: f64 = 1e-3;

/// Samples `ξ = ξ̄ + τ d` and looks for graph points whose limits leave the graph at `ξ̄`.
///
/// `family(ξ)` returns the graph of `K_ξ` in `(z, η)` coordinates, `None` off the domain.
pub fn osc_probe(
    family: &dyn Fn(&[f64]) -> Option<PolyhedralSet>,
    xi_bar: &[f64],
    z_dim: usize,
    mode: OscMode,
    cfg: &Config,
) -> Result<OscEvidence> {
    let base = family(xi_bar).ok_or(Error::BasepointOffGraph)?;
    let dim = base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = 0;
    let mut box_rows: Vec<Row> = Vec::new();
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        box_rows.push((e.clone(), 1.0));
        e[j] = -1.0;
        box_rows.push((e, 1.0));
    }
    let gap = |z: &[f64], eta: &[f64]| -> Result<Option<f64>> {
        match mode {
            OscMode::Graph => Ok(Some(base.distance(&[z, eta].concat(), cfg))),
            OscMode::ConicHullInValue => {
                let r = linalg::norm(eta);
                if r <= 1e-6 {
                    return Ok(None);
                }
                let hull = base.section(z)?.conic_hull(cfg);
                Ok(Some(hull.distance(&linalg::scale(eta, 1.0 / r), cfg)))
            }
        }
    };
    for _ in 0..OSC_DIRECTIONS {
        let d = linalg::random_unit(&mut rng, xi_bar.len());
        let objective: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut tail = Vec::new();
        for &tau in &OSC_SCHEDULE {
            let xi = linalg::axpy(xi_bar, tau, &d);
            let Some(g) = family(&xi) else { continue };
            let mut best: Option<(f64, Vec<f64>)> = None;
            for piece in g.pieces() {
                let boxed = piece.with_rows(box_rows.clone(), vec![]);
                if let Some(p) = boxed.maximize(&objective, cfg).point() {
                    let v = linalg::dot(&objective, p);
                    if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                        best = Some((v, p.to_vec()));
                    }
                }
            }
            let Some((_, p)) = best else { continue };
            samples += 1;
            let (z, eta) = p.split_at(z_dim);
            if let Some(dist) = gap(z, eta)? {
                tail.push((xi, z.to_vec(), eta.to_vec(), dist));
            }
        }
        if tail.len() >= 2 {
            let (a, b) = (&tail[tail.len() - 2], &tail[tail.len() - 1]);
            if a.3 > OSC_GAP && b.3 > OSC_GAP {
                let (xi, z, eta, distance) = b.clone();
                return Ok(OscEvidence { samples, counterexample: Some(OscCounterexample { xi, z, eta, distance }) });
            }
        }
    }
    Ok(OscEvidence { samples, counterexample: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::ConvexPolyhedron as P;

    fn cfg() -> Config {
        Config::default()
    }

    fn halfline() -> PolyhedralSet {
        P::nonneg(1, &[0]).into()
    }

    #[test]
    fn indicator_graph_is_set_times_zero() {
        let s = StructuredMapping::indicator_polyhedral(halfline(), 1);
        let g = s.graph(&cfg()).unwrap();
        assert!(g.contains(&[2.0, 0.0], 1e-9));
        assert!(!g.contains(&[2.0, 1.0], 1e-9));
        assert!(!g.contains(&[-1.0, 0.0], 1e-9));
    }

    #[test]
    fn normal_cone_map_of_halfline() {
        let s = StructuredMapping::NormalConeMap { set: P::nonneg(1, &[0]) };
        let g = PolyhedralCone::new(s.graph(&cfg()).unwrap()).unwrap();
        let expected = PolyhedralCone::new(
            PolyhedralSet::new(
                2,
                vec![P::new(2, vec![(vec![-1.0, 0.0], 0.0)], vec![(vec![0.0, 1.0], 0.0)]).unwrap(), {
                    P::new(2, vec![(vec![0.0, 1.0], 0.0)], vec![(vec![1.0, 0.0], 0.0)]).unwrap()
                }],
            )
            .unwrap(),
        )
        .unwrap();
        assert!(g.set_eq(&expected, &cfg()));
    }

    #[test]
    fn affine_shear_of_indicator() {
        let f = PolyMap::identity(1);
        let s = StructuredMapping::smooth_plus(f, StructuredMapping::indicator_polyhedral(halfline(), 1)).unwrap();
        let g = s.graph(&cfg()).unwrap();
        assert!(g.contains(&[2.0, 2.0], 1e-9));
        assert!(!g.contains(&[2.0, 0.0], 1e-9));
        assert!(!g.contains(&[-1.0, -1.0], 1e-9));
    }

    #[test]
    fn nonlinear_smooth_part_has_no_global_graph() {
        let f = PolyMap::parse(1, &["x1^2"]).unwrap();
        let s = StructuredMapping::smooth_plus(f, StructuredMapping::indicator_polyhedral(halfline(), 1)).unwrap();
        assert!(matches!(s.graph(&cfg()), Err(Error::NotPolyhedral(_))));
        assert!(s.contains_graph(&[2.0], &[4.0], &cfg()));
    }

    #[test]
    fn product_values_factor() {
        let r = StructuredMapping::NormalConeMap { set: P::nonneg(1, &[0]) };
        let t = StructuredMapping::indicator_polyhedral(halfline(), 2);
        let p = StructuredMapping::product(r.clone(), t.clone());
        let g = p.graph(&cfg()).unwrap();
        for (x, y) in [([0.0, 1.0], [-3.0, 0.0, 0.0]), ([2.0, 0.5], [0.0, 0.0, 0.0]), ([2.0, 0.5], [-1.0, 0.0, 0.0])] {
            let direct = r.contains_graph(&x[..1], &y[..1], &cfg()) && t.contains_graph(&x[1..], &y[1..], &cfg());
            assert_eq!(g.contains(&[&x[..], &y[..]].concat(), 1e-9), direct);
            assert_eq!(p.contains_graph(&x, &y, &cfg()), direct);
        }
    }

    #[test]
    fn homogeneous_map_of_indicator_coderivative() {
        // gph K = ℝ × ℝ₋, the coderivative of Δ_{ℝ₊} at 0
        let g = PolyhedralCone::from_piece(P::nonpos(2, &[1])).unwrap();
        let k = HomogeneousPiecewiseMap::new(1, 1, g).unwrap();
        let c = cfg();
        assert!(k.dom(&c).set_eq(&PolyhedralCone::full(1), &c));
        let (r, closed) = k.rge(&c);
        assert!(r.set_eq(&PolyhedralCone::from_piece(P::nonpos(1, &[0])).unwrap(), &c));
        assert!(!closed);
        assert!(!k.kernel(&c).unwrap().is_trivial(&c));
        assert_eq!(k.dist0(&[3.0], &c).unwrap(), 0.0);
    }

    #[test]
    fn trivial_homogeneous_map() {
        let k = HomogeneousPiecewiseMap::new(2, 1, PolyhedralCone::zero(3)).unwrap();
        let c = cfg();
        assert!(k.dom(&c).is_trivial(&c));
        assert!(k.rge(&c).0.is_trivial(&c));
        assert!(k.dist0(&[1.0, 0.0], &c).unwrap().is_infinite());
    }

    #[test]
    fn zero_set_cones_and_projection() {
        // parabola y + x^2 = 0
        let h = PolyMap::parse(2, &["x2 + x1^2"]).unwrap();
        let s = ClosedSet::Manifold { h };
        let c = cfg();
        let n = s.normal_cone(&[0.0, 0.0], &c).unwrap();
        assert!(n.contains_point(&[0.0, 3.0], &c) && !n.contains_point(&[1.0, 0.0], &c));
        let t = s.tangent_cone(&[1.0, -1.0], &c).unwrap();
        assert!(t.contains_point(&[1.0, -2.0], &c));
        let p = s.project(&[0.0, 1.0], &c).unwrap();
        assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9);
        let q = s.project(&[2.0, 0.0], &c).unwrap();
        assert!(s.contains(&q, &c));
    }

    #[test]
    fn osc_probe_constant_family() {
        let g: PolyhedralSet = P::nonneg(2, &[1]).into();
        let fam = move |_: &[f64]| Some(g.clone());
        let ev = osc_probe(&fam, &[0.0], 1, OscMode::Graph, &cfg()).unwrap();
        assert!(ev.counterexample.is_none());
        assert!(ev.samples > 0);
    }

    #[test]
    fn osc_probe_detects_jump() {
        // K_ξ(z) = {ξ} for ξ != 0, {0} at 0, conic hulls ℝ₊ξ vs {0}
        let fam = |xi: &[f64]| {
            let p = P::new(2, vec![], vec![(vec![0.0, 1.0], -xi[0])]).unwrap();
            Some(PolyhedralSet::from_piece(p))
        };
        let ev = osc_probe(&fam, &[0.0], 1, OscMode::ConicHullInValue, &cfg()).unwrap();
        assert!(ev.counterexample.is_some());
    }
}
