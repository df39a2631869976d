//! Certified lower bounds for the subderivative `dℓ_Ξ(ξ̄)(ω)` at singular points.
//!
//! Two certifiers share the same skeleton: verify the hypotheses in order,
//! refuse naming the first one that fails, otherwise return
//! `min_{z ∈ 𝒵₀} d(0, 𝒜′(ξ̄; ω) z + K)` for a certifier-specific closed set `K`.
//! The calm certifier uses `K = Θ + 𝒜(ξ̄) dom H` and subtracts `c‖ω‖`; the conic
//! one uses `K = Θ + rge 𝒜(ξ̄)`.

use serde::Serialize;

use super::{lsv_of_graph, shear_graph, subspace_of_range, GammaKind, LsvInstance, LsvValue};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat};
use crate::polyhedra::lp::LpOutcome;
use crate::polyhedra::{ConvexPolyhedron, PolyhedralCone, PolyhedralSet};
use crate::setmaps::{osc_probe, OscMode};
use crate::Config;

const ZERO_ROW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CondStatus {
    /// Verified by computation.
    Holds,
    /// Implied by the structure of the data (polynomial, polyhedral).
    Granted,
    /// Taken from the caller.
    Asserted,
    /// Sampling found no violation; not a proof.
    Evidence,
    Fails,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRecord {
    pub id: String,
    pub status: CondStatus,
    pub note: String,
}

/// Result of one certifier: a bound, or a refusal naming the failed condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremOutcome {
    /// Trace identifier of the certifier.
    pub theorem: &'static str,
    pub conditions: Vec<ConditionRecord>,
    /// Lower bound for `dℓ_Ξ(ξ̄)(ω)`, already net of `c‖ω‖`.
    pub bound: Option<f64>,
    /// Identifier of the first failed condition.
    pub refused: Option<String>,
    pub c: Option<f64>,
    /// Some hypothesis rests on sampling only.
    pub evidence_only: bool,
    /// The minimization over 𝒵₀ used only exact pieces.
    pub exact: bool,
}

impl TheoremOutcome {
    fn new(theorem: &'static str) -> Self {
        TheoremOutcome { theorem, conditions: vec![], bound: None, refused: None, c: None, evidence_only: false, exact: true }
    }

    fn record(&mut self, id: &str, status: CondStatus, note: impl Into<String>) {
        self.conditions.push(ConditionRecord { id: id.to_string(), status, note: note.into() });
        if status == CondStatus::Evidence {
            self.evidence_only = true;
        }
    }

    fn refuse(mut self, id: &str, note: impl Into<String>) -> Self {
        self.record(id, CondStatus::Fails, note);
        self.refused = Some(id.to_string());
        self
    }

    pub fn is_refused(&self) -> bool {
        self.refused.is_some()
    }
}

/// Calmness constant of Γ in ξ, uniform in z.
#[derive(Debug, Clone, PartialEq)]
pub enum Calmness {
    Derived(f64),
    Asserted(f64),
    Unavailable(String),
}

/// `{z : 0 ∈ 𝒜 z + H(z)}` from `gph H ⊂ ℝ^k × ℝ^q`.
pub fn zero_directions(h: &PolyhedralSet, a: &Mat, cfg: &Config) -> Result<PolyhedralSet> {
    let (q, k) = a.shape();
    check_dim("graph of H", k + q, h.dim())?;
    let mut m = Mat::zeros(k + q, k);
    for i in 0..k {
        m[(i, i)] = 1.0;
    }
    for i in 0..q {
        for j in 0..k {
            m[(k + i, j)] = -a[(i, j)];
        }
    }
    Ok(h.preimage_affine(&m, &vec![0.0; k + q])?.pruned(cfg))
}

pub(crate) fn meets_sphere(set: &PolyhedralSet, cfg: &Config) -> Result<bool> {
    let tol = cfg.tol_lsv.max(1e-9);
    for p in set.pieces() {
        if let Some((lo, hi)) = p.norm_range(cfg)? {
            if lo <= 1.0 + tol && hi >= 1.0 - tol {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Unit vectors of the set when every piece has an affine hull of dimension at most one.
pub(crate) fn unit_points(set: &PolyhedralSet, cfg: &Config) -> Result<Option<Vec<Vec<f64>>>> {
    let n = set.dim();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |p: Vec<f64>, piece: &ConvexPolyhedron| {
        if piece.contains(&p, 1e-7) && !out.iter().any(|q| linalg::norm(&linalg::sub(q, &p)) < 1e-7) {
            out.push(p);
        }
    };
    for piece in set.pieces() {
        let Some((rows, rhs)) = piece.affine_hull(cfg) else { continue };
        let m = linalg::mat_from_rows(&rows, n);
        let dir = linalg::null_space(&m);
        let base = if rows.is_empty() { vec![0.0; n] } else { linalg::lstsq(&m, &rhs) };
        match dir.ncols() {
            0 => {
                if (linalg::norm(&base) - 1.0).abs() <= 1e-9 {
                    push(base, piece);
                }
            }
            1 => {
                // ‖p + t v‖ = 1 with ‖v‖ = 1
                let v: Vec<f64> = dir.column(0).iter().copied().collect();
                let b = linalg::dot(&base, &v);
                let disc = b * b - (linalg::dot(&base, &base) - 1.0);
                if disc < -1e-12 {
                    continue;
                }
                let r = disc.max(0.0).sqrt();
                for t in [-b - r, -b + r] {
                    push(super::normalize(&linalg::axpy(&base, t, &v)), piece);
                }
            }
            _ => {
                if meets_sphere(&PolyhedralSet::from_piece(piece.clone()), cfg)? {
                    return Ok(None);
                }
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(Some(out))
}

fn piece_in_zero_z(p: &ConvexPolyhedron, z_dim: usize, cfg: &Config) -> bool {
    (0..z_dim).all(|j| {
        [1.0, -1.0].iter().all(|&s| {
            let mut c = vec![0.0; p.dim()];
            c[j] = s;
            matches!(p.maximize(&c, cfg), LpOutcome::Optimal { value, .. } if value <= cfg.tol_eq)
        })
    })
}

fn is_product_form(p: &ConvexPolyhedron, z_dim: usize) -> bool {
    p.inequalities().iter().chain(p.equalities()).all(|(a, _)| {
        let zn = linalg::norm(&a[..z_dim]);
        let en = linalg::norm(&a[z_dim..]);
        zn <= ZERO_ROW || en <= ZERO_ROW
    })
}

/// `Θ = cl cone ⋃_{z ∈ 𝒵} H(z)`, or `None` when a piece is neither conic nor of product form.
pub fn theta(h: &PolyhedralSet, z_dim: usize, cfg: &Config) -> Result<Option<PolyhedralCone>> {
    let q = h.dim() - z_dim;
    let eta: Vec<usize> = (z_dim..h.dim()).collect();
    let zc: Vec<usize> = (0..z_dim).collect();
    let mut parts: Vec<ConvexPolyhedron> = Vec::new();
    for p in h.pieces() {
        if p.is_empty(cfg) {
            continue;
        }
        if p.is_homogeneous() {
            // a convex cone outside {z = 0} is the closure of its part with z ≠ 0
            if piece_in_zero_z(p, z_dim, cfg) {
                continue;
            }
            if let Some(pr) = p.project(&eta, cfg) {
                parts.push(pr);
            }
        } else if is_product_form(p, z_dim) {
            let Some(d) = p.project(&zc, cfg) else { continue };
            if !meets_sphere(&PolyhedralSet::from_piece(d), cfg)? {
                continue;
            }
            let Some(vals) = p.project(&eta, cfg) else { continue };
            let hull = PolyhedralSet::from_piece(vals).conic_hull(cfg);
            parts.extend(hull.pieces().iter().cloned());
        } else {
            return Ok(None);
        }
    }
    if parts.is_empty() {
        return Ok(Some(PolyhedralCone::zero(q)));
    }
    Ok(Some(PolyhedralCone::new(PolyhedralSet::new(q, parts)?)?.deduplicated(cfg)))
}

/// Calmness of `ξ ↦ Γ(ξ, z)` at `ξ̄`, derived for jointly polyhedral graphs.
pub fn calmness_constant(inst: &LsvInstance, xi_bar: &[f64], cfg: &Config) -> Result<Calmness> {
    match &inst.gamma.kind {
        GammaKind::LocallyNested { .. } => Ok(Calmness::Derived(0.0)),
        GammaKind::General { calm: Some(c), .. } => Ok(Calmness::Asserted(*c)),
        GammaKind::General { calm: None, .. } => Ok(Calmness::Unavailable("no calmness constant supplied".into())),
        GammaKind::JointlyPolyhedral(graph) => polyhedral_calmness(graph, xi_bar, inst.z_dim(), cfg),
    }
}

fn polyhedral_calmness(graph: &PolyhedralSet, xi_bar: &[f64], z_dim: usize, cfg: &Config) -> Result<Calmness> {
    let p = xi_bar.len();
    let xz: Vec<usize> = (0..p + z_dim).collect();
    let mut c: f64 = 0.0;
    for piece in graph.pieces() {
        if PolyhedralSet::from_piece(piece.clone()).section(xi_bar)?.is_empty(cfg) {
            continue;
        }
        let forced = (0..p).all(|j| {
            [1.0, -1.0].iter().all(|&s| {
                let mut obj = vec![0.0; piece.dim()];
                obj[j] = s;
                matches!(piece.maximize(&obj, cfg), LpOutcome::Optimal { value, .. }
                    if (value - s * xi_bar[j]).abs() <= cfg.tol_eq * (1.0 + xi_bar[j].abs()))
            })
        });
        if forced {
            continue;
        }
        if let Some(proj) = piece.project(&xz, cfg) {
            let mixed = proj.inequalities().iter().chain(proj.equalities()).any(|(a, _)| {
                linalg::norm(&a[..p]) > ZERO_ROW && linalg::norm(&a[p..]) > ZERO_ROW
            });
            if mixed {
                return Ok(Calmness::Unavailable("the z-domain of a graph piece moves with ξ".into()));
            }
        }
        let rows: Vec<&(Vec<f64>, f64)> = piece
            .inequalities()
            .iter()
            .chain(piece.equalities())
            .filter(|(a, _)| linalg::norm(&a[p + z_dim..]) > ZERO_ROW)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let eta_rows: Vec<Vec<f64>> = rows.iter().map(|(a, _)| a[p + z_dim..].to_vec()).collect();
        let xi_rows: Vec<Vec<f64>> = rows.iter().map(|(a, _)| a[..p].to_vec()).collect();
        let Some(hoff) = hoffman_bound(&eta_rows, cfg.max_patterns) else {
            return Ok(Calmness::Unavailable(format!("more than {} row subsets in the Hoffman bound", cfg.max_patterns)));
        };
        let axi = linalg::mat_from_rows(&xi_rows, p);
        let axi_norm = if p == 0 { 0.0 } else { axi.svd(false, false).singular_values.max() };
        let axi_norm = if axi_norm <= ZERO_ROW { 0.0 } else { axi_norm };
        c = c.max(hoff * axi_norm);
    }
    Ok(Calmness::Derived(c))
}

/// `max 1/σ_min(C_J)` over row subsets `J` with linearly independent rows.
fn hoffman_bound(rows: &[Vec<f64>], cap: usize) -> Option<f64> {
    let q = rows[0].len();
    let r = rows.len();
    let mut best: f64 = 0.0;
    let mut visited = 0usize;
    let mut stack: Vec<Vec<usize>> = (0..r).map(|i| vec![i]).collect();
    while let Some(j) = stack.pop() {
        visited += 1;
        if visited > cap {
            return None;
        }
        let m = linalg::mat_from_rows(&j.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>(), q);
        let sv = m.svd(false, false).singular_values;
        let smin = sv.min();
        if smin <= 1e-10 * sv.max().max(1.0) {
            continue;
        }
        best = best.max(1.0 / smin);
        if j.len() < q {
            for i in j[j.len() - 1] + 1..r {
                let mut k = j.clone();
                k.push(i);
                stack.push(k);
            }
        }
    }
    Some(best)
}

/// `min_{z ∈ 𝒵₀} d(0, M z + K)` via the LSV of `{(z, M z + κ) : z ∈ zeros, κ ∈ K}`.
fn min_over_zeros(zeros: &PolyhedralSet, m: &Mat, k: &PolyhedralSet, cfg: &Config) -> Result<LsvValue> {
    let g = shear_graph(&zeros.product(k), m)?;
    lsv_of_graph(&g, zeros.dim(), cfg)
}

struct Common {
    h: PolyhedralSet,
    a: Mat,
    a_semi: Mat,
    zeros: PolyhedralSet,
}

/// Hypotheses (i)-(iii), shared by both certifiers.
fn common(inst: &LsvInstance, xi_bar: &[f64], omega: &[f64], out: &mut TheoremOutcome, cfg: &Config) -> Result<Option<Common>> {
    check_dim("parameter", inst.xi_dim(), xi_bar.len())?;
    check_dim("direction", inst.xi_dim(), omega.len())?;
    if !inst.domain.contains(xi_bar, cfg) {
        return Err(Error::PointNotInSet);
    }
    let Some(h) = inst.gamma.graph_at(xi_bar, cfg)? else {
        *out = out.clone().refuse("(i)", "H has empty graph");
        return Ok(None);
    };
    let rep = inst.singularity_report(xi_bar, cfg)?;
    if !rep.is_singular {
        *out = out.clone().refuse("(i)", format!("not singular, ℓ = {}", rep.lsv_value));
        return Ok(None);
    }
    out.record("(i)", CondStatus::Holds, "0 ∈ 𝒜z + H(z) for some unit z");
    match &inst.gamma.kind {
        GammaKind::JointlyPolyhedral(_) => out.record("(ii)", CondStatus::Granted, "polyhedral graph"),
        GammaKind::LocallyNested { .. } => out.record("(ii)", CondStatus::Granted, "limiting normal cones of a closed graph"),
        GammaKind::General { osc: true, .. } => out.record("(ii)", CondStatus::Asserted, "outer semicontinuity supplied"),
        GammaKind::General { osc: false, .. } => {
            *out = out.clone().refuse("(ii)", "Γ not known to be outer semicontinuous");
            return Ok(None);
        }
    }
    if inst.a.exact {
        out.record("(iii)", CondStatus::Granted, "polynomial entries");
    } else {
        out.record("(iii)", CondStatus::Asserted, "semiderivative supplied");
    }
    let a = inst.a.at(xi_bar)?;
    let a_semi = inst.a.semiderivative(xi_bar, omega)?;
    Ok(Some(Common { h, a, a_semi, zeros: rep.zeros }))
}

/// `𝒜 dom H` as the image of `gph H` under `[𝒜 | 0]`.
fn adom_h(c: &Common, cfg: &Config) -> Result<PolyhedralSet> {
    let (q, k) = c.a.shape();
    let mut m = Mat::zeros(q, k + q);
    m.view_mut((0, 0), (q, k)).copy_from(&c.a);
    c.h.image(&m, cfg)
}

/// The calm certifier: bound `min d(0, 𝒜′z + Θ + 𝒜 dom H) − c‖ω‖`.
pub fn lower_bound_calm(inst: &LsvInstance, xi_bar: &[f64], omega: &[f64], cfg: &Config) -> Result<TheoremOutcome> {
    calm_family(inst, xi_bar, omega, false, cfg)
}

/// Relaxed calm certifier with `cl rge H` in place of Θ; (vi) may be certified through
/// `𝒜 dom H ∩ cl rge H ⊂ {0}`.
pub fn lower_bound_calm_relaxed(inst: &LsvInstance, xi_bar: &[f64], omega: &[f64], cfg: &Config) -> Result<TheoremOutcome> {
    calm_family(inst, xi_bar, omega, true, cfg)
}

fn calm_family(inst: &LsvInstance, xi_bar: &[f64], omega: &[f64], relaxed: bool, cfg: &Config) -> Result<TheoremOutcome> {
    let mut out = TheoremOutcome::new(if relaxed { "Cor(3.3)" } else { "Thm(3.2)" });
    let Some(cm) = common(inst, xi_bar, omega, &mut out, cfg)? else {
        return Ok(out);
    };
    let z_dim = inst.z_dim();
    out.record("(iv)", CondStatus::Granted, "image of a polyhedral domain");
    let c = match calmness_constant(inst, xi_bar, cfg)? {
        Calmness::Derived(c) => {
            out.record("(v)", CondStatus::Holds, format!("c = {c}"));
            c
        }
        Calmness::Asserted(c) => {
            out.record("(v)", CondStatus::Asserted, format!("c = {c}"));
            c
        }
        Calmness::Unavailable(why) => return Ok(out.refuse("(v)", why)),
    };
    out.c = Some(c);
    let adom = adom_h(&cm, cfg)?;
    let theta = theta(&cm.h, z_dim, cfg)?;
    let rge = cm.h.project(&(z_dim..cm.h.dim()).collect::<Vec<_>>(), cfg);
    let sep = |set: &PolyhedralSet, neg: bool| -> Result<bool> {
        let s = if neg { set.image(&(-Mat::identity(set.dim(), set.dim())), cfg)? } else { set.clone() };
        Ok(adom.intersect(&s, cfg)?.nonzero_point(cfg).is_none())
    };
    let vi_holds = match &theta {
        Some(t) => sep(t.as_set(), true)?,
        None => false,
    };
    if vi_holds {
        out.record("(vi)", CondStatus::Holds, "𝒜 dom H ∩ (−Θ) = {0}");
    } else if relaxed && sep(&rge, false)? {
        out.record("Eq(3.4)", CondStatus::Holds, "𝒜 dom H ∩ cl rge H = {0}");
    } else if theta.is_none() {
        return Ok(out.refuse("(vi)", "Θ not computable for this H"));
    } else {
        return Ok(out.refuse("(vi)", "𝒜 dom H meets −Θ"));
    }
    let k_base = if relaxed {
        rge
    } else {
        match theta {
            Some(t) => t.into_set(),
            None => return Ok(out.refuse("(vi)", "Θ not computable for this H")),
        }
    };
    let k = k_base.minkowski_sum(&adom, cfg)?;
    let v = min_over_zeros(&cm.zeros, &cm.a_semi, &k, cfg)?;
    out.exact = v.exact;
    out.bound = Some(v.value.max(0.0) - c * linalg::norm(omega));
    Ok(out)
}

/// The conic certifier: bound `min d(0, 𝒜′z + Θ + rge 𝒜)`.
pub fn lower_bound_conic(inst: &LsvInstance, xi_bar: &[f64], omega: &[f64], cfg: &Config) -> Result<TheoremOutcome> {
    let mut out = TheoremOutcome::new("Thm(3.5)");
    let Some(cm) = common(inst, xi_bar, omega, &mut out, cfg)? else {
        return Ok(out);
    };
    let z_dim = inst.z_dim();
    if let Some(refusal) = conic_osc(inst, xi_bar, &cm, &mut out, cfg)? {
        return Ok(out.refuse("(iv')", refusal));
    }
    let Some(theta) = theta(&cm.h, z_dim, cfg)? else {
        return Ok(out.refuse("(v')", "Θ not computable for this H"));
    };
    let rge_a = subspace_of_range(&cm.a)?;
    if rge_a.intersect(&theta, cfg)?.nonzero_witness(cfg).is_some() {
        return Ok(out.refuse("(v')", "rge 𝒜 ∩ Θ ≠ {0}"));
    }
    out.record("(v')", CondStatus::Holds, "rge 𝒜 ∩ Θ = {0}");
    let k = theta.sum(&rge_a, cfg)?;
    let v = min_over_zeros(&cm.zeros, &cm.a_semi, k.as_set(), cfg)?;
    out.exact = v.exact;
    out.bound = Some(v.value.max(0.0));
    Ok(out)
}

/// Records (iv′); returns a refusal note when it is found to fail.
fn conic_osc(inst: &LsvInstance, xi_bar: &[f64], cm: &Common, out: &mut TheoremOutcome, cfg: &Config) -> Result<Option<String>> {
    let osc = inst.gamma.is_osc();
    if osc && gamma_cone_valued(inst) {
        out.record("(iv')", CondStatus::Holds, "Γ cone-valued and outer semicontinuous");
        return Ok(None);
    }
    if osc && leading_zero_structure(&cm.h, inst.z_dim(), cfg)? {
        out.record("(iv')", CondStatus::Holds, "H = {0} × 𝒯 with 𝒯(0) = {0} and 𝒯⁻¹(0) = {0}");
        return Ok(None);
    }
    let family = |xi: &[f64]| -> Option<PolyhedralSet> {
        if !inst.domain.contains(xi, cfg) {
            return None;
        }
        inst.gamma.graph_at(xi, cfg).ok().flatten()
    };
    let ev = osc_probe(&family, xi_bar, inst.z_dim(), OscMode::ConicHullInValue, cfg)?;
    match ev.counterexample {
        Some(cx) => Ok(Some(format!(
            "cone Γ not outer semicontinuous: at ξ = {:?}, z = {:?}, η = {:?} the direction is {:.3e} from cone H(z)",
            cx.xi, cx.z, cx.eta, cx.distance
        ))),
        None => {
            out.record("(iv')", CondStatus::Evidence, format!("{} probe samples, no violation", ev.samples));
            Ok(None)
        }
    }
}

fn gamma_cone_valued(inst: &LsvInstance) -> bool {
    match &inst.gamma.kind {
        GammaKind::LocallyNested { cone_valued } | GammaKind::General { cone_valued, .. } => *cone_valued,
        GammaKind::JointlyPolyhedral(g) => {
            // every row that touches η is homogeneous in η alone
            let off = inst.xi_dim() + inst.z_dim();
            g.pieces().iter().all(|p| {
                p.inequalities().iter().chain(p.equalities()).all(|(a, b)| {
                    linalg::norm(&a[off..]) <= ZERO_ROW || (linalg::norm(&a[..off]) <= ZERO_ROW && b.abs() <= ZERO_ROW)
                })
            })
        }
    }
}

/// `H(z) = {0}^s × 𝒯(z)` with the leading `s` value coordinates identically zero,
/// `𝒯(0) = {0}` and `𝒯⁻¹(0) = {0}`.
fn leading_zero_structure(h: &PolyhedralSet, z_dim: usize, cfg: &Config) -> Result<bool> {
    let dim = h.dim();
    let mut s = 0;
    'outer: while z_dim + s < dim {
        for p in h.pieces() {
            for sign in [1.0, -1.0] {
                let mut c = vec![0.0; dim];
                c[z_dim + s] = sign;
                match p.maximize(&c, cfg) {
                    LpOutcome::Optimal { value, .. } if value <= cfg.tol_eq => {}
                    LpOutcome::Infeasible => {}
                    _ => break 'outer,
                }
            }
        }
        s += 1;
    }
    let keep: Vec<usize> = (0..z_dim).chain(z_dim + s..dim).collect();
    let t = h.project(&keep, cfg);
    let r = dim - z_dim - s;
    let t_at_zero_trivial = if r == 0 {
        true
    } else {
        t.section(&vec![0.0; z_dim])?.nonzero_point(cfg).is_none()
    };
    let zc: Vec<usize> = (0..z_dim).collect();
    let t_inv_zero = if r == 0 {
        t.project(&zc, cfg)
    } else {
        let m = Mat::from_fn(z_dim + r, z_dim, |i, j| if i == j { 1.0 } else { 0.0 });
        t.preimage_affine(&m, &vec![0.0; z_dim + r])?
    };
    Ok(t_at_zero_trivial && t_inv_zero.nonzero_point(cfg).is_none())
}

/// Both certifiers; the reported bound is the larger of those produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedBound {
    pub bound: Option<f64>,
    pub outcomes: Vec<TheoremOutcome>,
}

pub fn combined_lower_bound(inst: &LsvInstance, xi_bar: &[f64], omega: &[f64], cfg: &Config) -> Result<CombinedBound> {
    let outcomes = vec![lower_bound_calm(inst, xi_bar, omega, cfg)?, lower_bound_conic(inst, xi_bar, omega, cfg)?];
    let bound = outcomes.iter().filter_map(|o| o.bound).fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))));
    Ok(CombinedBound { bound, outcomes })
}
