//! Least-singular-value functions `ℓ_Ξ(ξ) = inf_{‖z‖=1} d(0, Ξ(ξ, z))`.
//!
//! Instances come in split form `Ξ(ξ, z) = 𝒜(ξ) z + Γ(ξ, z)` over a closed
//! parameter set 𝒟. The matrix part is a [`MatrixField`] with its
//! semiderivative, the set part a [`GammaFamily`] whose values are polyhedral
//! graphs in `(z, η)`.

mod bounds;
mod search;
mod subderivative;

use std::sync::Arc;

pub use bounds::{
    calmness_constant, combined_lower_bound, lower_bound_calm, lower_bound_calm_relaxed, lower_bound_conic, theta,
    zero_directions, Calmness, CombinedBound, CondStatus, ConditionRecord, TheoremOutcome,
};
pub use search::{lsv_of_graph, outer_norm_of_graph, LsvValue};
pub use subderivative::{subderivative_estimate, SubderivativeEstimate, SUBDERIVATIVE_SCHEDULE};

use crate::error::{check_dim, Result};
use crate::gendiff;
use crate::linalg::{self, Mat};
use crate::polyhedra::{PolyhedralCone, PolyhedralSet};
use crate::setmaps::{ClosedSet, HomogeneousPiecewiseMap, StructuredMapping};
use crate::smoothmaps::{PolyMap, SmoothMap};
use crate::Config;

pub type MatFn = Arc<dyn Fn(&[f64]) -> Result<Mat> + Send + Sync>;
pub type SemiFn = Arc<dyn Fn(&[f64], &[f64]) -> Result<Mat> + Send + Sync>;
pub type GraphFn = Arc<dyn Fn(&[f64]) -> Result<Option<PolyhedralSet>> + Send + Sync>;

/// `ξ ↦ 𝒜(ξ) ∈ ℝ^{rows×cols}` with its semiderivative `𝒜′(ξ; ω)`.
#[derive(Clone)]
pub struct MatrixField {
    pub rows: usize,
    pub cols: usize,
    pub xi_dim: usize,
    eval: MatFn,
    semi: SemiFn,
    /// Exact semiderivative (polynomial data) rather than an asserted one.
    pub exact: bool,
}

impl std::fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatrixField({}x{} over ℝ^{})", self.rows, self.cols, self.xi_dim)
    }
}

impl MatrixField {
    pub fn new(rows: usize, cols: usize, xi_dim: usize, eval: MatFn, semi: SemiFn, exact: bool) -> Self {
        MatrixField { rows, cols, xi_dim, eval, semi, exact }
    }

    pub fn constant(m: Mat, xi_dim: usize) -> Self {
        let (rows, cols) = m.shape();
        let m2 = m.clone();
        MatrixField {
            rows,
            cols,
            xi_dim,
            eval: Arc::new(move |_| Ok(m2.clone())),
            semi: Arc::new(move |_, _| Ok(Mat::zeros(rows, cols))),
            exact: true,
        }
    }

    /// Entries from a polynomial map with `rows * cols` components in row-major order.
    pub fn from_poly(map: PolyMap, rows: usize, cols: usize) -> Result<Self> {
        check_dim("matrix field entries", rows * cols, map.out_dim())?;
        let xi_dim = map.in_dim();
        let m1 = map.clone();
        let eval: MatFn = Arc::new(move |xi| Ok(Mat::from_row_slice(rows, cols, &m1.evaluate(xi)?)));
        let semi: SemiFn = Arc::new(move |xi, w| Ok(Mat::from_row_slice(rows, cols, &map.derivative_apply(xi, w)?)));
        Ok(MatrixField { rows, cols, xi_dim, eval, semi, exact: true })
    }

    /// `𝒜(ξ) = ∇F(u)` for `ξ = (u, y)`, the coderivative split of `F + C`.
    pub fn jacobian_of(f: SmoothMap, xi_dim: usize) -> Self {
        let (n, m) = (f.in_dim(), f.out_dim());
        let exact = f.is_exact();
        let f1 = f.clone();
        MatrixField {
            rows: n,
            cols: m,
            xi_dim,
            eval: Arc::new(move |xi| f1.jacobian(&xi[..n])),
            semi: Arc::new(move |xi, w| f.jacobian_semiderivative(&xi[..n], &w[..n])),
            exact,
        }
    }

    pub fn at(&self, xi: &[f64]) -> Result<Mat> {
        check_dim("matrix field argument", self.xi_dim, xi.len())?;
        (self.eval)(xi)
    }

    pub fn semiderivative(&self, xi: &[f64], omega: &[f64]) -> Result<Mat> {
        check_dim("matrix field argument", self.xi_dim, xi.len())?;
        check_dim("matrix field direction", self.xi_dim, omega.len())?;
        (self.semi)(xi, omega)
    }
}

/// What is known about `Γ` beyond evaluating it.
#[derive(Debug, Clone)]
pub enum GammaKind {
    /// `gph Γ ⊂ ℝ^{ξ} × ℝ^{z} × ℝ^{η}` is a finite union of polyhedra.
    JointlyPolyhedral(PolyhedralSet),
    /// `Γ(ξ, ·) ⊂ Γ(ξ̄, ·)` near `ξ̄` (coderivatives of polyhedral graphs).
    LocallyNested { cone_valued: bool },
    /// Properties asserted by the caller.
    General { cone_valued: bool, osc: bool, calm: Option<f64> },
}

/// `Γ(ξ, ·)` as a graph in `(z, η)`, `None` off the domain.
#[derive(Clone)]
pub struct GammaFamily {
    pub z_dim: usize,
    pub eta_dim: usize,
    pub kind: GammaKind,
    eval: GraphFn,
}

impl std::fmt::Debug for GammaFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GammaFamily({:?}, z {}, η {})", self.kind, self.z_dim, self.eta_dim)
    }
}

impl GammaFamily {
    pub fn jointly_polyhedral(xi_dim: usize, z_dim: usize, eta_dim: usize, graph: PolyhedralSet) -> Result<Self> {
        check_dim("Γ graph", xi_dim + z_dim + eta_dim, graph.dim())?;
        let g = graph.clone();
        let eval: GraphFn = Arc::new(move |xi| {
            let s = g.section(xi)?;
            Ok(Some(s).filter(|s| !s.pieces().is_empty()))
        });
        Ok(GammaFamily { z_dim, eta_dim, kind: GammaKind::JointlyPolyhedral(graph), eval })
    }

    pub fn locally_nested(z_dim: usize, eta_dim: usize, cone_valued: bool, eval: GraphFn) -> Self {
        GammaFamily { z_dim, eta_dim, kind: GammaKind::LocallyNested { cone_valued }, eval }
    }

    pub fn general(z_dim: usize, eta_dim: usize, cone_valued: bool, osc: bool, calm: Option<f64>, eval: GraphFn) -> Self {
        GammaFamily { z_dim, eta_dim, kind: GammaKind::General { cone_valued, osc, calm }, eval }
    }

    pub fn graph_at(&self, xi: &[f64], cfg: &Config) -> Result<Option<PolyhedralSet>> {
        Ok((self.eval)(xi)?.map(|g| g.pruned(cfg)).filter(|g| !g.pieces().is_empty()))
    }

    pub fn is_osc(&self) -> bool {
        !matches!(self.kind, GammaKind::General { osc: false, .. })
    }
}

/// `Ξ(ξ, z) = 𝒜(ξ) z + Γ(ξ, z)` over `ξ ∈ 𝒟`.
#[derive(Debug, Clone)]
pub struct LsvInstance {
    pub domain: ClosedSet,
    pub a: MatrixField,
    pub gamma: GammaFamily,
}

impl LsvInstance {
    pub fn new(domain: ClosedSet, a: MatrixField, gamma: GammaFamily) -> Result<Self> {
        check_dim("matrix field parameters", domain.dim(), a.xi_dim)?;
        check_dim("matrix field rows", gamma.eta_dim, a.rows)?;
        check_dim("matrix field columns", gamma.z_dim, a.cols)?;
        Ok(LsvInstance { domain, a, gamma })
    }

    pub fn xi_dim(&self) -> usize {
        self.domain.dim()
    }
    pub fn z_dim(&self) -> usize {
        self.gamma.z_dim
    }
    pub fn eta_dim(&self) -> usize {
        self.gamma.eta_dim
    }

    /// `gph Ξ(ξ, ·) = {(z, 𝒜(ξ) z + η) : η ∈ Γ(ξ, z)}`; `None` off 𝒟 or off the domain of Γ.
    pub fn xi_graph(&self, xi: &[f64], cfg: &Config) -> Result<Option<PolyhedralSet>> {
        check_dim("parameter", self.xi_dim(), xi.len())?;
        if !self.domain.contains(xi, cfg) {
            return Ok(None);
        }
        let Some(g) = self.gamma.graph_at(xi, cfg)? else {
            return Ok(None);
        };
        let a = self.a.at(xi)?;
        Ok(Some(shear_graph(&g, &a)?))
    }

    /// `ℓ_Ξ(ξ)`, `+inf` outside 𝒟.
    pub fn lsv_value(&self, xi: &[f64], cfg: &Config) -> Result<LsvValue> {
        match self.xi_graph(xi, cfg)? {
            Some(g) => lsv_of_graph(&g, self.z_dim(), cfg),
            None => Ok(LsvValue::infinite()),
        }
    }

    /// Singularity of `ξ̄` decided on the solution set `{z : 0 ∈ 𝒜(ξ̄) z + H(z)}`.
    pub fn singularity_report(&self, xi_bar: &[f64], cfg: &Config) -> Result<SingularityReport> {
        let lsv = self.lsv_value(xi_bar, cfg)?;
        let Some(h) = self.gamma.graph_at(xi_bar, cfg)? else {
            return Ok(SingularityReport {
                is_singular: false,
                zeros: PolyhedralSet::empty(self.z_dim()),
                unit_points: Some(vec![]),
                lsv_value: lsv.value,
            });
        };
        let a = self.a.at(xi_bar)?;
        let zeros = zero_directions(&h, &a, cfg)?;
        let unit_points = bounds::unit_points(&zeros, cfg)?;
        let is_singular = bounds::meets_sphere(&zeros, cfg)?;
        Ok(SingularityReport { is_singular, zeros, unit_points, lsv_value: lsv.value })
    }
}

/// `{(z, M z + η) : (z, η) ∈ g}`.
pub(crate) fn shear_graph(g: &PolyhedralSet, m: &Mat) -> Result<PolyhedralSet> {
    let (q, k) = m.shape();
    check_dim("shear", k + q, g.dim())?;
    let mut s = Mat::identity(k + q, k + q);
    for i in 0..q {
        for j in 0..k {
            s[(k + i, j)] = -m[(i, j)];
        }
    }
    g.preimage_affine(&s, &vec![0.0; k + q])
}

/// Outcome of the exact singularity test at `ξ̄`.
#[derive(Debug, Clone)]
pub struct SingularityReport {
    pub is_singular: bool,
    /// Solution set whose unit-sphere slice is 𝒵₀.
    pub zeros: PolyhedralSet,
    /// 𝒵₀ as explicit unit vectors when it is finite.
    pub unit_points: Option<Vec<Vec<f64>>>,
    pub lsv_value: f64,
}

/// `Reg(u, y; S) = ℓ` of the coderivative `D*S(u|y)`; `+inf` off the graph.
pub fn reg_value(s: &StructuredMapping, u: &[f64], y: &[f64], cfg: &Config) -> Result<LsvValue> {
    check_dim("argument", s.in_dim(), u.len())?;
    check_dim("value", s.out_dim(), y.len())?;
    if !s.contains_graph(u, y, cfg) {
        return Ok(LsvValue::infinite());
    }
    let k = gendiff::coderivative(s, u, y, cfg)?;
    lsv_of_graph(k.graph.as_set(), s.out_dim(), cfg)
}

/// `|K⁻¹|⁺ = sup {‖z‖ : η ∈ K(z), ‖η‖ <= 1}`.
pub fn outer_norm(k: &HomogeneousPiecewiseMap, cfg: &Config) -> Result<f64> {
    outer_norm_of_graph(&k.graph, k.arg_dim, cfg)
}

/// `ℓ` of a homogeneous map.
pub fn lsv_of_map(k: &HomogeneousPiecewiseMap, cfg: &Config) -> Result<LsvValue> {
    lsv_of_graph(k.graph.as_set(), k.arg_dim, cfg)
}

/// Split form of the coderivative family of `F + C` over `𝒟 = gph C`:
/// `Ξ((u, y), z) = ∇F(u) z + D*C(u|y)(z)`.
pub fn coderivative_instance(f: SmoothMap, c: StructuredMapping, cfg: &Config) -> Result<LsvInstance> {
    let (n, m) = (c.in_dim(), c.out_dim());
    check_dim("smooth part inputs", n, f.in_dim())?;
    check_dim("smooth part outputs", m, f.out_dim())?;
    let domain = c.graph_set(cfg)?;
    let polyhedral_graph = domain.as_polyhedral().is_some();
    let cone_valued = cone_valued_coderivative(&c);
    let c2 = c.clone();
    let eval: GraphFn = Arc::new(move |xi: &[f64]| {
        let cfg = Config::default();
        let (u, y) = xi.split_at(n);
        if !c2.contains_graph(u, y, &cfg) {
            return Ok(None);
        }
        Ok(Some(gendiff::coderivative(&c2, u, y, &cfg)?.graph.into_set()))
    });
    let gamma = if polyhedral_graph {
        GammaFamily::locally_nested(m, n, cone_valued, eval)
    } else {
        // zero-set graphs: normal cones rotate with the base point, no calmness constant is known
        GammaFamily::general(m, n, cone_valued, true, None, eval)
    };
    LsvInstance::new(domain, MatrixField::jacobian_of(f, n + m), gamma)
}

fn cone_valued_coderivative(c: &StructuredMapping) -> bool {
    match c {
        StructuredMapping::Indicator { .. } | StructuredMapping::ConstantSet { .. } => true,
        StructuredMapping::Product(a, b) => cone_valued_coderivative(a) && cone_valued_coderivative(b),
        _ => false,
    }
}

pub(crate) fn normalize(z: &[f64]) -> Vec<f64> {
    let n = linalg::norm(z);
    if n == 0.0 {
        z.to_vec()
    } else {
        linalg::scale(z, 1.0 / n)
    }
}

pub(crate) fn subspace_of_range(m: &Mat) -> Result<PolyhedralCone> {
    // rge M = {x : Nᵀ x = 0} for N spanning ker Mᵀ
    let n = linalg::null_space(&m.transpose());
    let rows: Vec<(Vec<f64>, f64)> = linalg::cols_of(&n).into_iter().map(|c| (c, 0.0)).collect();
    PolyhedralCone::from_piece(crate::polyhedra::ConvexPolyhedron::new(m.nrows(), vec![], rows)?)
}


#[cfg(test)]
mod tests;
