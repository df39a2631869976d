//! Checkers for metric, metric 2-, Gfrerer and classic 2-regularity.
//!
//! Each checker returns a [`RegularityVerdict`]. Certified statuses come from
//! exact computations on polyhedral or linear data only; anything resting on
//! the sampled subderivative estimate is reported as numeric evidence.
//! Sufficient-condition checkers never disprove the property.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::gendiff;
use crate::linalg::{self, Mat};
use crate::lsv::{
    self, coderivative_instance, combined_lower_bound, reg_value, subderivative_estimate, LsvInstance,
    SubderivativeEstimate, SUBDERIVATIVE_SCHEDULE,
};
use crate::polyhedra::lp::LpOutcome;
use crate::polyhedra::{ConeSystem, PolyhedralCone, PolyhedralSet};
use crate::setmaps::{ClosedSet, StructuredMapping};
use crate::smoothmaps::{PolyMap, SmoothMap};
use crate::Config;

/// Subderivative estimates at or below this count as zero.
const ESTIMATE_ZERO: f64 = 1e-6;
const NEIGHBOR_SAMPLES: usize = 16;
const EQUIV_RANDOM_ETAS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Property {
    MetricRegular,
    Metric2Regular,
    GfrererRegular,
    Classic2Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    CertifiedYes,
    CertifiedNo,
    SufficientConditionHolds,
    SufficientConditionFails,
    NumericEvidenceFor,
    NumericEvidenceAgainst,
}

impl VerdictStatus {
    /// Yes, or evidence for yes.
    pub fn is_positive(self) -> bool {
        matches!(self, VerdictStatus::CertifiedYes | VerdictStatus::SufficientConditionHolds | VerdictStatus::NumericEvidenceFor)
    }

    /// The property is disproved or evidence points against it.
    pub fn is_negative(self) -> bool {
        matches!(self, VerdictStatus::CertifiedNo | VerdictStatus::NumericEvidenceAgainst)
    }

    pub fn is_certified(self) -> bool {
        matches!(self, VerdictStatus::CertifiedYes | VerdictStatus::CertifiedNo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub id: String,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityVerdict {
    pub property: Property,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub direction: Option<Vec<f64>>,
    /// `η` for Gfrerer regularity.
    pub eta: Option<Vec<f64>>,
    pub status: VerdictStatus,
    pub modulus: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub trace: Vec<TraceEntry>,
}

impl RegularityVerdict {
    fn new(property: Property, u: &[f64], y: &[f64]) -> Self {
        RegularityVerdict {
            property,
            u: u.to_vec(),
            y: y.to_vec(),
            direction: None,
            eta: None,
            status: VerdictStatus::NumericEvidenceAgainst,
            modulus: None,
            witness: None,
            trace: vec![],
        }
    }

    fn note(&mut self, id: &str, result: impl Into<String>) {
        self.trace.push(TraceEntry { id: id.to_string(), result: result.into() });
    }

    fn from_condition(property: Property, u: &[f64], y: &[f64], w: &[f64], check: &ConditionCheck) -> Self {
        let mut v = RegularityVerdict::new(property, u, y);
        v.direction = Some(w.to_vec());
        v.record(check);
        if check.holds {
            v.status = VerdictStatus::SufficientConditionHolds;
        } else {
            v.status = VerdictStatus::SufficientConditionFails;
            v.witness = check.witness.clone();
        }
        v
    }

    fn record(&mut self, check: &ConditionCheck) {
        self.note(check.id, if check.holds { "holds" } else { "fails" });
    }
}

/// `K_{ε,δ}(ū; w) = ū + (ε𝔹 ∩ cone(w + δ𝔹))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalNeighborhood {
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
}

impl DirectionalNeighborhood {
    pub fn new(center: Vec<f64>, direction: Vec<f64>, eps: f64, delta: f64) -> Result<Self> {
        check_dim("neighborhood direction", center.len(), direction.len())?;
        if !(eps > 0.0 && delta > 0.0) {
            return Err(Error::Validation("radii must be positive".into()));
        }
        Ok(DirectionalNeighborhood { center, direction, eps, delta })
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        if u.len() != self.center.len() {
            return false;
        }
        let d = linalg::sub(u, &self.center);
        let nd = linalg::norm(&d);
        if nd > self.eps {
            return false;
        }
        let nw = linalg::norm(&self.direction);
        if nd == 0.0 || nw <= self.delta {
            return true;
        }
        // distance from w to the open ray through d
        let p = linalg::dot(&self.direction, &d);
        if p <= 0.0 {
            return false;
        }
        let dist2 = (nw * nw - p * p / (nd * nd)).max(0.0);
        dist2.sqrt() <= self.delta
    }
}

/// Outcome of one "only the zero solution" condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub id: &'static str,
    pub holds: bool,
    /// A nonzero solution (or a nonzero polar vector for covering conditions).
    pub witness: Option<Vec<f64>>,
}

fn unit_direction(w: &[f64]) -> Result<Vec<f64>> {
    let n = linalg::norm(w);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Validation("direction must be nonzero".into()));
    }
    Ok(linalg::scale(w, 1.0 / n))
}

/// `S = F + C` with `F ≡ 0` when `S` has no smooth part.
fn split(s: &StructuredMapping) -> (SmoothMap, StructuredMapping) {
    match s {
        StructuredMapping::SmoothPlus { f, c } => (f.clone(), (**c).clone()),
        _ => (PolyMap::zero(s.in_dim(), s.out_dim()).into(), s.clone()),
    }
}

fn zero_solution_check(
    id: &'static str,
    sys: &ConeSystem,
    z: &[usize],
    cfg: &Config,
) -> Result<ConditionCheck> {
    let w = sys.nonzero_in(z, cfg)?;
    Ok(ConditionCheck { id, holds: w.is_none(), witness: w.map(|s| z.iter().map(|&i| s[i]).collect()) })
}

// ---------------------------------------------------------------- metric regularity

/// Coderivative criterion: regular iff `D*S(ū|ȳ)⁻¹(0) = {0}`, modulus `1/Reg`.
pub fn check_metric_regularity(s: &StructuredMapping, u: &[f64], y: &[f64], cfg: &Config) -> Result<RegularityVerdict> {
    check_dim("argument", s.in_dim(), u.len())?;
    check_dim("value", s.out_dim(), y.len())?;
    if !s.contains_graph(u, y, cfg) {
        return Err(Error::BasepointOffGraph);
    }
    let mut v = RegularityVerdict::new(Property::MetricRegular, u, y);
    let k = match gendiff::coderivative(s, u, y, cfg) {
        Ok(k) => k,
        Err(e @ (Error::NotPolyhedral(_) | Error::NormalConeUnavailable)) => return sampled_metric_regularity(s, u, y, v, e, cfg),
        Err(e) => return Err(e),
    };
    let ker = gendiff::coderivative_kernel(&k, cfg)?;
    match ker.nonzero_witness(cfg) {
        None => {
            let reg = lsv::lsv_of_map(&k, cfg)?.value;
            v.status = VerdictStatus::CertifiedYes;
            v.modulus = Some(1.0 / reg);
            v.note("Thm(4.8)(d)", "kernel trivial");
        }
        Some(z) => {
            v.status = VerdictStatus::CertifiedNo;
            v.witness = Some(lsv::normalize(&z));
            v.note("Thm(4.8)(d)", "kernel nontrivial");
        }
    }
    Ok(v)
}

// Reg at graph points near the base point; falls back to the original error when nothing evaluates.
fn sampled_metric_regularity(
    s: &StructuredMapping,
    u: &[f64],
    y: &[f64],
    mut v: RegularityVerdict,
    original: Error,
    cfg: &Config,
) -> Result<RegularityVerdict> {
    let n = u.len();
    let base = [u, y].concat();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut values = Vec::new();
    for k in 0..=NEIGHBOR_SAMPLES {
        let p = if k == 0 {
            base.clone()
        } else {
            let r = 1e-3 * (1.0 + linalg::norm(&base));
            let q = linalg::axpy(&base, r, &linalg::random_unit(&mut rng, base.len()));
            match s.graph_projection(&q, cfg) {
                Ok(p) => p,
                Err(_) => continue,
            }
        };
        if let Ok(r) = reg_value(s, &p[..n], &p[n..], cfg) {
            values.push(r.value);
        }
    }
    let Some(min) = values.iter().copied().reduce(f64::min) else {
        return Err(original);
    };
    if min > cfg.tol_lsv {
        v.status = VerdictStatus::NumericEvidenceFor;
        v.modulus = Some(1.0 / min);
    } else {
        v.status = VerdictStatus::NumericEvidenceAgainst;
    }
    v.note("Thm(4.8)(d)", format!("sampled Reg near the point, minimum {min:.3e}"));
    Ok(v)
}

/// The four `Reg` values of the Reg-chain and whether they are ordered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegChain {
    /// `Σ = F + C` at `(ū, F(ū) + ȳ)`.
    pub sigma: f64,
    /// `𝒞(u) = (−u, F(u)) + gph C` at `(ū, (0, F(ū) + ȳ))`.
    pub cal_c: f64,
    /// `Q(u, y) = F(u) + y + Δ_{gph C}(u, y)` at `((ū, ȳ), F(ū) + ȳ)`.
    pub q: f64,
    /// `𝒬(u, σ, y) = (−u + σ, F(u) + y) + Δ_{gph C}(σ, y)` at `((ū, ū, ȳ), (0, F(ū) + ȳ))`.
    pub cal_q: f64,
    /// `R_Σ >= max(R_𝒞, R_Q) >= R_𝒬 >= 0` within `tol_lsv`.
    pub ordered: bool,
    /// `R_𝒬 = 0` forces the other three to zero.
    pub squeeze: bool,
}

/// The four mappings of the Reg-chain with their base points.
pub fn reg_chain_mappings(
    f: &PolyMap,
    c: &StructuredMapping,
    u: &[f64],
    y: &[f64],
    cfg: &Config,
) -> Result<Vec<(StructuredMapping, Vec<f64>, Vec<f64>)>> {
    let (n, m) = (c.in_dim(), c.out_dim());
    check_dim("smooth part inputs", n, f.in_dim())?;
    check_dim("smooth part outputs", m, f.out_dim())?;
    if !c.contains_graph(u, y, cfg) {
        return Err(Error::BasepointOffGraph);
    }
    let gph = c.graph_set(cfg)?;
    let fu = f.evaluate(u)?;
    let sy = linalg::add(&fu, y);
    let neg_id = PolyMap::affine(&(-Mat::identity(n, n)), &vec![0.0; n]);

    let sigma = StructuredMapping::smooth_plus(f.clone(), c.clone())?;

    let fc = neg_id.stack(f)?;
    let cal_c = StructuredMapping::smooth_plus(fc, StructuredMapping::ConstantSet { in_dim: n, set: gph.clone() })?;
    let cal_c_y = [vec![0.0; n], sy.clone()].concat();

    let pick_y = Mat::from_fn(m, n + m, |r, k| if k == n + r { 1.0 } else { 0.0 });
    let fq = f.embed_inputs(n + m, &(0..n).collect::<Vec<_>>()).add(&PolyMap::affine(&pick_y, &vec![0.0; m]))?;
    let q = StructuredMapping::smooth_plus(fq, StructuredMapping::Indicator { set: gph.clone(), out_dim: m })?;

    let d = 2 * n + m;
    let shift = Mat::from_fn(n, d, |r, k| {
        if k == r {
            -1.0
        } else if k == n + r {
            1.0
        } else {
            0.0
        }
    });
    let tail = Mat::from_fn(m, d, |r, k| if k == 2 * n + r { 1.0 } else { 0.0 });
    let fqq = PolyMap::affine(&shift, &vec![0.0; n])
        .stack(&f.embed_inputs(d, &(0..n).collect::<Vec<_>>()).add(&PolyMap::affine(&tail, &vec![0.0; m]))?)?;
    let cal_q = StructuredMapping::smooth_plus(
        fqq,
        StructuredMapping::Indicator { set: gph.with_universe_left(n), out_dim: n + m },
    )?;

    Ok(vec![
        (sigma, u.to_vec(), sy.clone()),
        (cal_c, u.to_vec(), cal_c_y.clone()),
        (q, [u, y].concat(), sy),
        (cal_q, [u, u, y].concat(), cal_c_y),
    ])
}

pub fn reg_chain(f: &PolyMap, c: &StructuredMapping, u: &[f64], y: &[f64], cfg: &Config) -> Result<RegChain> {
    let maps = reg_chain_mappings(f, c, u, y, cfg)?;
    let mut r = [0.0; 4];
    for (k, (s, x, v)) in maps.iter().enumerate() {
        r[k] = reg_value(s, x, v, cfg)?.value;
    }
    let [sigma, cal_c, q, cal_q] = r;
    let tol = cfg.tol_lsv;
    let mid = cal_c.max(q);
    let ordered = sigma >= mid - tol && mid >= cal_q - tol && cal_q >= -tol;
    let squeeze = cal_q > tol || r.iter().all(|v| *v <= tol);
    Ok(RegChain { sigma, cal_c, q, cal_q, ordered, squeeze })
}

// ---------------------------------------------------------------- metric 2-regularity

/// Per piece: the least-norm point and the LP optima along `±e_j`.
fn sample_values(set: &PolyhedralSet, cfg: &Config) -> Vec<Vec<f64>> {
    let dim = set.dim();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |p: Vec<f64>| {
        if !out.iter().any(|q| linalg::norm_inf(&linalg::sub(q, &p)) <= 1e-9) {
            out.push(p);
        }
    };
    for piece in set.pieces() {
        if piece.is_empty(cfg) {
            continue;
        }
        if let Some(p) = piece.project_point(&vec![0.0; dim], cfg) {
            push(p);
        }
        for j in 0..dim {
            for s in [1.0, -1.0] {
                let mut c = vec![0.0; dim];
                c[j] = s;
                if let LpOutcome::Optimal { x, .. } = piece.maximize(&c, cfg) {
                    push(x);
                }
            }
        }
    }
    out
}

/// `Ξ̃((u, y), z) = ∇F(u) z + D*C(u|y)(z)` over `gph C`, its base point and the shift `F′(ū) w`.
struct Tilde {
    inst: LsvInstance,
    c: StructuredMapping,
    xi_bar: Vec<f64>,
    jw: Vec<f64>,
    polyhedral: bool,
}

impl Tilde {
    fn new(s: &StructuredMapping, u: &[f64], y: &[f64], w: &[f64], cfg: &Config) -> Result<Self> {
        let (f, c) = split(s);
        let fu = f.evaluate(u)?;
        let xi_bar = [u, &linalg::sub(y, &fu)[..]].concat();
        let jw = f.jacobian(u)?.transpose() * Mat::from_column_slice(w.len(), 1, w);
        let polyhedral = c.is_polyhedral();
        let inst = coderivative_instance(f, c.clone(), cfg)?;
        Ok(Tilde { inst, c, xi_bar, jw: jw.as_slice().to_vec(), polyhedral })
    }

    /// Direction in `gph C` coordinates for `(w, η)` in `gph S` coordinates.
    fn omega(&self, w: &[f64], eta: &[f64]) -> Vec<f64> {
        [w, &linalg::sub(eta, &self.jw)[..]].concat()
    }

    fn estimate(&self, omega: &[f64], cfg: &Config) -> Result<SubderivativeEstimate> {
        let phi = |xi: &[f64]| Ok(self.inst.lsv_value(xi, cfg)?.value);
        let proj = |p: &[f64]| self.c.graph_projection(p, cfg).ok();
        subderivative_estimate(&phi, &self.xi_bar, omega, &SUBDERIVATIVE_SCHEDULE, Some(&proj), cfg)
    }

    /// A positive certified bound that does not depend on `η`, with its exactness.
    fn certified(&self, omega: &[f64], v: &mut RegularityVerdict, cfg: &Config) -> Result<Option<(f64, bool)>> {
        let both = combined_lower_bound(&self.inst, &self.xi_bar, omega, cfg)?;
        let mut best: Option<(f64, bool)> = None;
        for o in &both.outcomes {
            match (&o.refused, o.bound) {
                (Some(r), _) => v.note(o.theorem, format!("refused at {r}")),
                (None, Some(b)) => {
                    v.note(o.theorem, format!("bound {b:.6e}"));
                    let eta_free = o.c.is_none_or(|c| c == 0.0);
                    if eta_free && b > cfg.tol_lsv {
                        let exact = o.exact && !o.evidence_only && self.polyhedral;
                        if best.is_none_or(|(bb, _)| b > bb) {
                            best = Some((b, exact));
                        }
                    }
                }
                (None, None) => v.note(o.theorem, "no bound"),
            }
        }
        Ok(best)
    }
}

fn graphical_values(s: &StructuredMapping, u: &[f64], y: &[f64], w: &[f64], cfg: &Config) -> Result<PolyhedralSet> {
    check_dim("direction", s.in_dim(), w.len())?;
    let ds = gendiff::graphical_derivative(s, u, y, cfg)?;
    Ok(ds.value_at(w)?.pruned(cfg))
}

/// Metric 2-regularity relative to `w`: metric regularity first, then
/// `inf_{η ∈ DS(ū|ȳ)(w)} d Reg(ū, ȳ; S)(w, η) > 0`.
pub fn check_metric2_regularity(
    s: &StructuredMapping,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    let w = unit_direction(w)?;
    let vals = graphical_values(s, u, y, &w, cfg)?;
    if vals.is_empty(cfg) {
        return Err(Error::EmptyGraphicalDerivative);
    }
    let etas = sample_values(&vals, cfg);
    let mut v = RegularityVerdict::new(Property::Metric2Regular, u, y);
    v.direction = Some(w.clone());
    let rho0 = 2.0 * (1.0 + etas.iter().map(|e| linalg::norm(e)).fold(0.0, f64::max));
    v.note("Def(5.2)", format!("rho0 = {rho0:.6e}"));

    let mr = check_metric_regularity(s, u, y, cfg)?;
    if mr.status == VerdictStatus::CertifiedYes {
        v.status = VerdictStatus::CertifiedYes;
        v.modulus = mr.modulus;
        v.note("Rem(5.2)", "metrically regular");
        return Ok(v);
    }
    v.note("Thm(4.8)(d)", "Reg = 0");

    let tilde = Tilde::new(s, u, y, &w, cfg)?;
    v.note("Thm(5.5)", "coderivative split form");
    let cert = tilde.certified(&tilde.omega(&w, &etas[0]), &mut v, cfg)?;

    let mut min_est: Option<(f64, Vec<f64>)> = None;
    let mut first_err = None;
    for eta in &etas {
        match tilde.estimate(&tilde.omega(&w, eta), cfg) {
            Ok(e) => {
                if min_est.as_ref().is_none_or(|(m, _)| e.value < *m) {
                    min_est = Some((e.value, eta.clone()));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some((m, _)) = &min_est {
        v.note("Thm(5.4)(c)", format!("estimated inf d Reg = {m:.6e}"));
    }

    match (cert, min_est, first_err) {
        (Some((b, true)), est, _) => {
            v.status = VerdictStatus::CertifiedYes;
            v.modulus = Some(match est {
                Some((m, _)) if m > ESTIMATE_ZERO => 1.0 / m,
                _ => 1.0 / b,
            });
        }
        (_, Some((m, eta)), _) if m <= ESTIMATE_ZERO => {
            v.status = VerdictStatus::NumericEvidenceAgainst;
            v.witness = Some(eta);
        }
        (_, Some((m, _)), None) => {
            v.status = VerdictStatus::NumericEvidenceFor;
            v.modulus = Some(1.0 / m);
        }
        (Some((b, false)), _, _) => {
            v.status = VerdictStatus::NumericEvidenceFor;
            v.modulus = Some(1.0 / b);
        }
        (None, _, Some(e)) => return Err(e),
        (None, None, None) => return Err(Error::Inconsistency("no estimate and no bound".into())),
    }
    Ok(v)
}

// ---------------------------------------------------------------- Gfrerer regularity

/// Gfrerer regularity relative to `(w, η)`.
pub fn check_gfrerer(
    s: &StructuredMapping,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    eta: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    check_dim("direction", s.in_dim(), w.len())?;
    check_dim("value direction", s.out_dim(), eta.len())?;
    let ds = gendiff::graphical_derivative(s, u, y, cfg)?;
    let mut v = RegularityVerdict::new(Property::GfrererRegular, u, y);
    v.direction = Some(w.to_vec());
    v.eta = Some(eta.to_vec());
    if !ds.contains(w, eta, cfg) {
        v.status = VerdictStatus::CertifiedYes;
        v.note("Def(6.1)", "(w, eta) not tangent to the graph");
        return Ok(v);
    }
    let mr = check_metric_regularity(s, u, y, cfg)?;
    if mr.status == VerdictStatus::CertifiedYes {
        v.status = VerdictStatus::CertifiedYes;
        v.note("Thm(6.2)(c)", "Reg > 0");
        return Ok(v);
    }
    v.note("Thm(4.8)(d)", "Reg = 0");
    let tilde = Tilde::new(s, u, y, w, cfg)?;
    let omega = tilde.omega(w, eta);
    let cert = tilde.certified(&omega, &mut v, cfg)?;
    let est = tilde.estimate(&omega, cfg);
    if let Ok(e) = &est {
        v.note("Thm(6.2)(c)", format!("estimated d Reg = {:.6e}", e.value));
    }
    match (cert, est) {
        (Some((b, true)), est) => {
            v.status = VerdictStatus::CertifiedYes;
            v.modulus = Some(match est {
                Ok(e) if e.value > ESTIMATE_ZERO => 1.0 / e.value,
                _ => 1.0 / b,
            });
        }
        (_, Ok(e)) if e.value <= ESTIMATE_ZERO => v.status = VerdictStatus::NumericEvidenceAgainst,
        (_, Ok(e)) => {
            v.status = VerdictStatus::NumericEvidenceFor;
            v.modulus = Some(1.0 / e.value);
        }
        (Some((b, false)), Err(_)) => {
            v.status = VerdictStatus::NumericEvidenceFor;
            v.modulus = Some(1.0 / b);
        }
        (None, Err(e)) => return Err(e),
    }
    Ok(v)
}

/// Metric 2-regularity against Gfrerer regularity over sampled `η`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub m2r: RegularityVerdict,
    pub gfrerer: Vec<RegularityVerdict>,
    pub consistent: bool,
}

pub fn m2r_equiv_gfrerer(s: &StructuredMapping, u: &[f64], y: &[f64], w: &[f64], cfg: &Config) -> Result<EquivalenceReport> {
    let w = unit_direction(w)?;
    let m2r = check_metric2_regularity(s, u, y, &w, cfg)?;
    let vals = graphical_values(s, u, y, &w, cfg)?;
    let mut etas = sample_values(&vals, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..EQUIV_RANDOM_ETAS {
        etas.push(linalg::random_unit(&mut rng, s.out_dim()));
    }
    let mut gfrerer = Vec::with_capacity(etas.len());
    for eta in &etas {
        gfrerer.push(check_gfrerer(s, u, y, &w, eta, cfg)?);
    }
    let all_yes = gfrerer.iter().all(|g| g.status.is_positive());
    let consistent = m2r.status.is_positive() == all_yes;
    Ok(EquivalenceReport { m2r, gfrerer, consistent })
}

// ---------------------------------------------------------------- sufficient conditions

/// `[z ∈ −N_{C₀}(ȳ) ∩ ker ∇F(ū), (∇F)′(ū; w) z ∈ ∇F(ū) N_{C₀}(ȳ)] ⟹ z = 0` for `F(·) + C₀`.
pub fn constant_set_condition(
    f: &SmoothMap,
    c0: &ClosedSet,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<ConditionCheck> {
    let m = f.out_dim();
    check_dim("constant set", m, c0.dim())?;
    let nc = c0.normal_cone(y, cfg)?;
    let g = f.jacobian(u)?;
    let gp = f.jacobian_semiderivative(u, w)?;
    let mut sys = ConeSystem::new();
    let z = sys.block(m);
    let nu = sys.block(m);
    sys.member(&nc.negated(), &z)?;
    sys.equation(&[(&g, &z)])?;
    sys.member(&nc, &nu)?;
    sys.equation(&[(&gp, &z), (&(-g), &nu)])?;
    zero_solution_check("Eq(5.3)", &sys, &z, cfg)
}

/// `[z ∈ −N_{C₀}(ȳ) ∩ ker ∇F(ū), (∇F)′(ū; w) z ∈ rge ∇F(ū)] ⟹ z = 0`.
pub fn constant_set_range_condition(
    f: &SmoothMap,
    c0: &ClosedSet,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<ConditionCheck> {
    let m = f.out_dim();
    check_dim("constant set", m, c0.dim())?;
    let nc = c0.normal_cone(y, cfg)?;
    let g = f.jacobian(u)?;
    let gp = f.jacobian_semiderivative(u, w)?;
    let mut sys = ConeSystem::new();
    let z = sys.block(m);
    let a = sys.block(m);
    sys.member(&nc.negated(), &z)?;
    sys.equation(&[(&g, &z)])?;
    sys.equation(&[(&gp, &z), (&(-g), &a)])?;
    zero_solution_check("Eq(5.8)", &sys, &z, cfg)
}

/// `[0 ∈ ∇F z + D*C(z), 0 ∈ (∇F)′(ū; w) z + ∇F ν + D*C(ν)] ⟹ z = 0` for polyhedral `C`.
pub fn polyhedral_mapping_condition(
    f: &SmoothMap,
    c: &StructuredMapping,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<ConditionCheck> {
    let (n, m) = (c.in_dim(), c.out_dim());
    check_dim("smooth part inputs", n, f.in_dim())?;
    check_dim("smooth part outputs", m, f.out_dim())?;
    if !c.is_polyhedral() {
        return Err(Error::NotPolyhedral("the set-valued part must have a polyhedral graph".into()));
    }
    let dc = gendiff::graphical_derivative(c, u, y, cfg)?;
    if !dc.dom(cfg).contains_point(w, cfg) {
        return Err(Error::DirectionNotInDomain);
    }
    let k = gendiff::coderivative(c, u, y, cfg)?;
    let g = f.jacobian(u)?;
    let gp = f.jacobian_semiderivative(u, w)?;
    let id = Mat::identity(n, n);
    let mut sys = ConeSystem::new();
    let z = sys.block(m);
    let v1 = sys.block(n);
    let nu = sys.block(m);
    let v2 = sys.block(n);
    sys.member(&k.graph, &[z.clone(), v1.clone()].concat())?;
    sys.equation(&[(&g, &z), (&id, &v1)])?;
    sys.member(&k.graph, &[nu.clone(), v2.clone()].concat())?;
    sys.equation(&[(&gp, &z), (&g, &nu), (&id, &v2)])?;
    zero_solution_check("Eq(5.4)", &sys, &z, cfg)
}

fn check_tangent(c0: &ClosedSet, u: &[f64], w: &[f64], cfg: &Config) -> Result<()> {
    check_dim("direction", c0.dim(), w.len())?;
    if !c0.tangent_cone(u, cfg)?.contains_point(w, cfg) {
        return Err(Error::DirectionNotTangent);
    }
    Ok(())
}

/// `[∇F(ū) z ∈ N_{C₀}(ū), (∇F)′(ū; w) z ∈ rge ∇F(ū) + N_{C₀}(ū)] ⟹ z = 0` for `F + Δ_{C₀}`.
pub fn indicator_condition(f: &SmoothMap, c0: &ClosedSet, u: &[f64], w: &[f64], cfg: &Config) -> Result<ConditionCheck> {
    let (n, m) = (f.in_dim(), f.out_dim());
    check_dim("indicator set", n, c0.dim())?;
    check_tangent(c0, u, w, cfg)?;
    let nc = c0.normal_cone(u, cfg)?;
    let g = f.jacobian(u)?;
    let gp = f.jacobian_semiderivative(u, w)?;
    let id = Mat::identity(n, n);
    let mut sys = ConeSystem::new();
    let z = sys.block(m);
    let p = sys.block(n);
    let a = sys.block(m);
    let q = sys.block(n);
    sys.equation(&[(&g, &z), (&(-id.clone()), &p)])?;
    sys.member(&nc, &p)?;
    sys.equation(&[(&gp, &z), (&(-g), &a), (&(-id), &q)])?;
    sys.member(&nc, &q)?;
    zero_solution_check("Eq(5.5)", &sys, &z, cfg)
}

/// `rge ∇F(ū) ∩ N_{C₀}(ū) = {0}`; the witness is a nonzero common vector.
pub fn range_normal_separation(f: &SmoothMap, c0: &ClosedSet, u: &[f64], cfg: &Config) -> Result<ConditionCheck> {
    let (n, m) = (f.in_dim(), f.out_dim());
    check_dim("indicator set", n, c0.dim())?;
    let nc = c0.normal_cone(u, cfg)?;
    let g = f.jacobian(u)?;
    let mut sys = ConeSystem::new();
    let a = sys.block(m);
    let p = sys.block(n);
    sys.equation(&[(&g, &a), (&(-Mat::identity(n, n)), &p)])?;
    sys.member(&nc, &p)?;
    zero_solution_check("Eq(5.6)", &sys, &p, cfg)
}

fn basepoint_sum(f: &SmoothMap, u: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(linalg::add(&f.evaluate(u)?, y))
}

/// Sufficient condition for `F(·) + C₀` with polyhedral `C₀ ⊂ ℝ^m`, `ȳ ∈ C₀`.
pub fn sufficient_m2r_polyhedral_constraint(
    f: &SmoothMap,
    c0: &ClosedSet,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    if c0.as_polyhedral().is_none() {
        return Err(Error::NotPolyhedral("the constant set must be polyhedral".into()));
    }
    let w = unit_direction(w)?;
    let check = constant_set_condition(f, c0, u, y, &w, cfg)?;
    let mut v = RegularityVerdict::from_condition(Property::Metric2Regular, u, &basepoint_sum(f, u, y)?, &w, &check);
    v.note("Lem(5.6)", "sufficient condition");
    Ok(v)
}

/// Sufficient condition for `F + C` with a polyhedral mapping `C`, `ȳ ∈ C(ū)`.
pub fn sufficient_m2r_polyhedral_mapping(
    f: &SmoothMap,
    c: &StructuredMapping,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    let w = unit_direction(w)?;
    let check = polyhedral_mapping_condition(f, c, u, y, &w, cfg)?;
    let mut v = RegularityVerdict::from_condition(Property::Metric2Regular, u, &basepoint_sum(f, u, y)?, &w, &check);
    v.note("Thm(5.7)", "sufficient condition");
    Ok(v)
}

/// Sufficient condition for `F + Δ_{C₀}` with polyhedral `C₀ ⊂ ℝⁿ`.
pub fn sufficient_m2r_indicator_polyhedral(
    f: &SmoothMap,
    c0: &ClosedSet,
    u: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    if c0.as_polyhedral().is_none() {
        return Err(Error::NotPolyhedral("the indicator set must be polyhedral".into()));
    }
    let w = unit_direction(w)?;
    let check = indicator_condition(f, c0, u, &w, cfg)?;
    let mut v = RegularityVerdict::from_condition(Property::Metric2Regular, u, &f.evaluate(u)?, &w, &check);
    v.note("Cor(5.8)", "sufficient condition");
    Ok(v)
}

/// Sufficient condition for `F(·) + C₀` with any `C₀` whose normal cone is computable.
pub fn sufficient_m2r_nonpolyhedral_constraint(
    f: &SmoothMap,
    c0: &ClosedSet,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    let w = unit_direction(w)?;
    let check = constant_set_range_condition(f, c0, u, y, &w, cfg)?;
    let mut v = RegularityVerdict::from_condition(Property::Metric2Regular, u, &basepoint_sum(f, u, y)?, &w, &check);
    v.note("Prop(5.10)", "sufficient condition");
    Ok(v)
}

/// Separation first, then the indicator condition. A failed separation is a
/// refusal, reported as `ConditionFailed("Eq(5.6)")`.
pub fn sufficient_m2r_indicator_nonpolyhedral(
    f: &SmoothMap,
    c0: &ClosedSet,
    u: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    let w = unit_direction(w)?;
    check_tangent(c0, u, &w, cfg)?;
    let sep = range_normal_separation(f, c0, u, cfg)?;
    if !sep.holds {
        return Err(Error::ConditionFailed("Eq(5.6)".into()));
    }
    let check = indicator_condition(f, c0, u, &w, cfg)?;
    let mut v = RegularityVerdict::from_condition(Property::Metric2Regular, u, &f.evaluate(u)?, &w, &check);
    v.trace.insert(0, TraceEntry { id: sep.id.into(), result: "holds".into() });
    v.note("Thm(5.11)", "sufficient condition");
    Ok(v)
}

/// Product mappings `G + R × T`; refusals name the failed letter, e.g. `ConditionFailed("(d)")`.
///
/// `x_sigma = (x̄, σ̄)`, `y_nu = (ȳ, ν̄) ∈ R(x̄) × T(σ̄)`, `w_mu = (w, μ)`.
pub fn sufficient_m2r_product(
    g: &PolyMap,
    r: &StructuredMapping,
    t: &StructuredMapping,
    x_sigma: &[f64],
    y_nu: &[f64],
    w_mu: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    let (k, p, l, q) = (r.in_dim(), r.out_dim(), t.in_dim(), t.out_dim());
    check_dim("G inputs", k + l, g.in_dim())?;
    check_dim("G outputs", p + q, g.out_dim())?;
    check_dim("base argument", k + l, x_sigma.len())?;
    check_dim("base value", p + q, y_nu.len())?;
    let w_mu = unit_direction(w_mu)?;
    let prod = StructuredMapping::product(r.clone(), t.clone());
    if !prod.contains_graph(x_sigma, y_nu, cfg) {
        return Err(Error::BasepointOffGraph);
    }
    if gendiff::graphical_derivative(&prod, x_sigma, y_nu, cfg)?.value_at(&w_mu)?.is_empty(cfg) {
        return Err(Error::EmptyGraphicalDerivative);
    }
    let (x, sigma) = x_sigma.split_at(k);
    let (y, nu) = y_nu.split_at(p);
    let fail = |c: &str| Error::ConditionFailed(c.to_string());
    let base = linalg::add(&g.evaluate(x_sigma)?, y_nu);
    let mut v = RegularityVerdict::new(Property::Metric2Regular, x_sigma, &base);
    v.direction = Some(w_mu.clone());
    v.note("Thm(5.14)(a)", "granted: polynomial G");

    let dt = gendiff::coderivative(t, sigma, nu, cfg)?;
    if !dt.value_at_zero(cfg)?.is_trivial(cfg) {
        return Err(fail("(b)"));
    }
    v.note("Thm(5.14)(b)", "holds");
    if !gendiff::coderivative_kernel(&dt, cfg)?.is_trivial(cfg) {
        return Err(fail("(c)"));
    }
    v.note("Thm(5.14)(c)", "holds");
    let dr = gendiff::coderivative(r, x, y, cfg)?;
    if !dr.rge(cfg).0.is_trivial(cfg) {
        return Err(fail("(d)"));
    }
    let grad = g.jacobian(x_sigma)?;
    let semi = g.jacobian_semiderivative(x_sigma, &w_mu)?;
    let gx = grad.rows(0, k).into_owned();
    let gs = grad.rows(k, l).into_owned();
    let gxp = semi.rows(0, k).into_owned();
    let gsp = semi.rows(k, l).into_owned();
    let rge_t = dt.rge(cfg).0;
    if !lsv::subspace_of_range(&gs)?.intersect(&rge_t, cfg)?.is_trivial(cfg) {
        return Err(fail("(d)"));
    }
    v.note("Thm(5.14)(d)", "holds");

    let id = Mat::identity(l, l);
    let mut sys = ConeSystem::new();
    let z = sys.block(p + q);
    let v1 = sys.block(l);
    let beta = sys.block(p + q);
    let v2 = sys.block(l);
    sys.equation(&[(&gx, &z)])?;
    sys.member(&dt.graph, &[z[p..].to_vec(), v1.clone()].concat())?;
    sys.equation(&[(&gs, &z), (&id, &v1)])?;
    sys.equation(&[(&gxp, &z), (&gx, &beta)])?;
    sys.member(&rge_t, &v2)?;
    sys.equation(&[(&gsp, &z), (&gs, &beta), (&id, &v2)])?;
    let check = zero_solution_check("Thm(5.14)(e)", &sys, &z, cfg)?;
    v.record(&check);
    if check.holds {
        v.status = VerdictStatus::SufficientConditionHolds;
    } else {
        v.status = VerdictStatus::SufficientConditionFails;
        v.witness = check.witness;
    }
    Ok(v)
}

// ---------------------------------------------------------------- classic 2-regularity

/// `[z ∈ ker ∇F(ū), (∇F)′(ū; w) z ∈ rge ∇F(ū)] ⟹ z = 0` by linear algebra.
pub fn classic_kernel_condition(f: &PolyMap, u: &[f64], w: &[f64]) -> Result<ConditionCheck> {
    let g = f.jacobian(u)?;
    let gp = f.jacobian_semiderivative(u, w)?;
    let ker = linalg::null_space(&g);
    let k = ker.ncols();
    if k == 0 {
        return Ok(ConditionCheck { id: "Eq(6.2)", holds: true, witness: None });
    }
    // component of (∇F)′ z orthogonal to rge ∇F
    let basis = linalg::row_space(&g.transpose());
    let n = g.nrows();
    let perp = Mat::identity(n, n) - &basis * basis.transpose();
    let b = perp * &gp * &ker;
    let nb = linalg::null_space(&b);
    if nb.ncols() == 0 {
        return Ok(ConditionCheck { id: "Eq(6.2)", holds: true, witness: None });
    }
    let z = &ker * nb.column(0);
    Ok(ConditionCheck { id: "Eq(6.2)", holds: false, witness: Some(z.as_slice().to_vec()) })
}

/// `rge F′(ū) + F″(ū)[w, ker F′(ū)] = ℝ^m` by a rank test.
pub fn classic_rank_condition(f: &PolyMap, u: &[f64], w: &[f64]) -> Result<ConditionCheck> {
    let j = f.jacobian(u)?.transpose();
    let h = f.jacobian_semiderivative(u, w)?.transpose();
    let m = j.nrows();
    let ker = linalg::null_space(&j);
    let hk = &h * &ker;
    let mut cols = linalg::cols_of(&j);
    cols.extend(linalg::cols_of(&hk));
    let big = linalg::mat_from_cols(&cols, m);
    if linalg::rank(&big) == m {
        return Ok(ConditionCheck { id: "Eq(6.3)", holds: true, witness: None });
    }
    // a vector orthogonal to the sum
    let y = linalg::null_space(&big.transpose());
    Ok(ConditionCheck { id: "Eq(6.3)", holds: false, witness: Some(y.column(0).iter().copied().collect()) })
}

fn single_piece<'a>(c0: &'a PolyhedralSet, what: &str) -> Result<&'a PolyhedralSet> {
    if c0.pieces().len() != 1 {
        return Err(Error::Validation(format!("{what} needs a convex polyhedron")));
    }
    Ok(c0)
}

fn covers_space(cone: &PolyhedralCone, cfg: &Config) -> (bool, Option<Vec<f64>>) {
    let w = cone.polar(cfg).nonzero_witness(cfg);
    (w.is_none(), w)
}

/// `F′(ū) 𝓛 + F″(ū)[w, ker F′(ū) ∩ T_{C₀}(ū)] = ℝ^m`, `𝓛 = span C₀`, convex `C₀ ⊂ ℝⁿ`.
pub fn span_tangent_condition(
    f: &PolyMap,
    c0: &PolyhedralSet,
    u: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<ConditionCheck> {
    let c0 = single_piece(c0, "span condition")?;
    let n = f.in_dim();
    check_dim("constraint set", n, c0.dim())?;
    if !c0.contains(u, cfg.tol_mem) {
        return Err(Error::PointNotInSet);
    }
    let j = f.jacobian(u)?.transpose();
    let h = f.jacobian_semiderivative(u, w)?.transpose();
    let cone = c0.conic_hull(cfg);
    let span = cone.sum(&cone.negated(), cfg)?;
    let ker = lsv::subspace_of_range(&linalg::null_space(&j))?;
    let kt = ker.intersect(&c0.tangent_cone(u, cfg)?, cfg)?;
    let mut cols = linalg::cols_of(&j);
    cols.extend(linalg::cols_of(&h));
    let map = linalg::mat_from_cols(&cols, j.nrows());
    let image = span.product(&kt).linear_image(&map, cfg)?;
    let (holds, witness) = covers_space(&image, cfg);
    Ok(ConditionCheck { id: "Eq(5.7)", holds, witness })
}

/// `rge F′(ū) + F″(ū)[w, F′(ū)⁻¹ T_{C₀}(ȳ)] − T_{C₀}(ȳ) = ℝ^m` with `ȳ = F(ū) ∈ C₀ ⊂ ℝ^m` convex.
pub fn tangent_set_condition(f: &PolyMap, c0: &PolyhedralSet, u: &[f64], w: &[f64], cfg: &Config) -> Result<ConditionCheck> {
    let c0 = single_piece(c0, "tangent set condition")?;
    let (n, m) = (f.in_dim(), f.out_dim());
    check_dim("constraint set", m, c0.dim())?;
    let y = f.evaluate(u)?;
    if !c0.contains(&y, cfg.tol_mem) {
        return Err(Error::PointNotInSet);
    }
    let j = f.jacobian(u)?.transpose();
    let h = f.jacobian_semiderivative(u, w)?.transpose();
    let t = c0.tangent_cone(&y, cfg)?;
    let pre = t.linear_preimage(&j)?;
    let mut cols = linalg::cols_of(&j);
    cols.extend(linalg::cols_of(&h));
    cols.extend(linalg::cols_of(&(-Mat::identity(m, m))));
    let map = linalg::mat_from_cols(&cols, m);
    let image = PolyhedralCone::full(n).product(&pre).product(&t).linear_image(&map, cfg)?;
    let (holds, witness) = covers_space(&image, cfg);
    Ok(ConditionCheck { id: "Rem(5.9)", holds, witness })
}

/// Classic 2-regularity of a single-valued `F` at `ū` relative to `w`.
///
/// The kernel and rank tests must agree. Optional polyhedral sets add the
/// span condition (`C₀ ⊂ ℝⁿ`) and the tangent set condition (`C₀ ⊂ ℝ^m`) to
/// the trace; they do not affect the status.
pub fn classic2_regularity(
    f: &PolyMap,
    u: &[f64],
    w: &[f64],
    domain_set: Option<&PolyhedralSet>,
    value_set: Option<&PolyhedralSet>,
    cfg: &Config,
) -> Result<RegularityVerdict> {
    check_dim("argument", f.in_dim(), u.len())?;
    let w = unit_direction(w)?;
    check_dim("direction", f.in_dim(), w.len())?;
    let a = classic_kernel_condition(f, u, &w)?;
    let b = classic_rank_condition(f, u, &w)?;
    if a.holds != b.holds {
        return Err(Error::Inconsistency("kernel and rank tests disagree".into()));
    }
    let mut v = RegularityVerdict::new(Property::Classic2Regular, u, &f.evaluate(u)?);
    v.direction = Some(w.clone());
    v.record(&a);
    v.record(&b);
    if a.holds {
        v.status = VerdictStatus::CertifiedYes;
    } else {
        v.status = VerdictStatus::CertifiedNo;
        v.witness = a.witness;
    }
    if let Some(c0) = domain_set {
        v.record(&span_tangent_condition(f, c0, u, &w, cfg)?);
    }
    if let Some(c0) = value_set {
        v.record(&tangent_set_condition(f, c0, u, &w, cfg)?);
    }
    Ok(v)
}

// ---------------------------------------------------------------- curve falsifier

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub reg: f64,
    /// `‖u(t) − ū‖`.
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveEvidence {
    pub samples: Vec<CurveSample>,
    /// Unit initial direction of the curve, estimated at the smallest `t`.
    pub direction: Vec<f64>,
    /// `NumericEvidenceAgainst` when `Reg <= tol_lsv ‖u(t) − ū‖` at the three smallest `t`.
    pub status: Option<VerdictStatus>,
}

/// Evaluates `Reg` along a graph curve through `(ū, ȳ)`.
pub fn curve_falsifier(
    s: &StructuredMapping,
    u: &[f64],
    y: &[f64],
    curve: &dyn Fn(f64) -> (Vec<f64>, Vec<f64>),
    schedule: &[f64],
    cfg: &Config,
) -> Result<CurveEvidence> {
    if !s.contains_graph(u, y, cfg) {
        return Err(Error::BasepointOffGraph);
    }
    let (u0, y0) = curve(0.0);
    check_dim("curve argument", u.len(), u0.len())?;
    check_dim("curve value", y.len(), y0.len())?;
    let scale = 1e-9 * (1.0 + linalg::norm_inf(u) + linalg::norm_inf(y));
    if linalg::norm_inf(&linalg::sub(&u0, u)) > scale || linalg::norm_inf(&linalg::sub(&y0, y)) > scale {
        return Err(Error::Validation("curve must start at the base point".into()));
    }
    let mut ts: Vec<f64> = schedule.to_vec();
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Validation("schedule must be positive".into()));
    }
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut samples = Vec::with_capacity(ts.len());
    let mut direction = vec![];
    for &t in &ts {
        let (ut, yt) = curve(t);
        if !s.contains_graph(&ut, &yt, cfg) {
            return Err(Error::CurveOffGraph(t));
        }
        let d = linalg::sub(&ut, u);
        let dist = linalg::norm(&d);
        if dist == 0.0 {
            return Err(Error::Validation("curve is constant in the argument".into()));
        }
        direction = lsv::normalize(&d);
        let reg = reg_value(s, &ut, &yt, cfg)?.value;
        samples.push(CurveSample { t, reg, dist });
    }
    let tail = &samples[samples.len().saturating_sub(3)..];
    let against = tail.len() == 3 && tail.iter().all(|c| c.reg <= cfg.tol_lsv * c.dist);
    Ok(CurveEvidence { samples, direction, status: against.then_some(VerdictStatus::NumericEvidenceAgainst) })
}
