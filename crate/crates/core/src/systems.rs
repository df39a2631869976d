//! Coupled constraint systems `0 = Φ(x, σ), x ∈ Ω, 0 ∈ T(σ)` and variational
//! systems `0 ∈ f(x) + ℳ(x) N_{C₀}(g(x))`.
//!
//! Both compile to a generalized equation `0 ∈ G(x, σ) + 𝒫(x, σ)` and are
//! checked with homogeneous cone systems assembled from the closed-form
//! derivatives of `G` and `𝒫`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::gendiff;
use crate::linalg::{self, Mat};
use crate::polyhedra::{ConeSystem, ConvexPolyhedron, PolyhedralCone, PolyhedralSet};
use crate::regularity::{
    check_metric_regularity, sufficient_m2r_product, ConditionCheck, Property, RegularityVerdict, TraceEntry,
    VerdictStatus,
};
use crate::setmaps::{ClosedSet, HomogeneousPiecewiseMap, StructuredMapping};
use crate::smoothmaps::{PolyMap, Term};
use crate::Config;

const SOLUTION_TOL: f64 = 1e-9;
const ALPHA_RANDOM: usize = 8;

/// `0 = Φ(x, σ)`, `x ∈ Ω`, `0 ∈ T(σ)` with `Φ: ℝ^k × ℝ^l → ℝ^p`, `T: ℝ^l ⇉ ℝ^q`.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub phi: PolyMap,
    pub omega: PolyhedralSet,
    pub t: StructuredMapping,
}

impl ConstraintSystem {
    pub fn new(phi: PolyMap, omega: PolyhedralSet, t: StructuredMapping) -> Result<Self> {
        check_dim("Φ inputs", omega.dim() + t.in_dim(), phi.in_dim())?;
        t.validate()?;
        Ok(ConstraintSystem { phi, omega, t })
    }

    pub fn k(&self) -> usize {
        self.omega.dim()
    }
    pub fn l(&self) -> usize {
        self.t.in_dim()
    }
    pub fn p(&self) -> usize {
        self.phi.out_dim()
    }
    pub fn q(&self) -> usize {
        self.t.out_dim()
    }

    pub fn check_solution(&self, x: &[f64], sigma: &[f64], cfg: &Config) -> Result<()> {
        check_dim("x", self.k(), x.len())?;
        check_dim("σ", self.l(), sigma.len())?;
        let r = self.phi.evaluate(&[x, sigma].concat())?;
        if linalg::norm_inf(&r) > SOLUTION_TOL {
            return Err(Error::NotASolution(format!("|Φ| = {:.3e}", linalg::norm_inf(&r))));
        }
        if !self.omega.contains(x, cfg.tol_mem) {
            return Err(Error::NotASolution("x is not in Ω".into()));
        }
        if !self.t.contains_graph(sigma, &vec![0.0; self.q()], cfg) {
            return Err(Error::NotASolution("0 is not in T(σ)".into()));
        }
        Ok(())
    }

    fn omega_is_universe(&self) -> bool {
        self.omega.pieces().len() == 1
            && self.omega.pieces()[0].inequalities().is_empty()
            && self.omega.pieces()[0].equalities().is_empty()
    }

    /// `(∇ₓΦ, ∇_σΦ)` at `(x̄, σ̄)`, shapes `k × p` and `l × p`.
    fn gradients(&self, xs: &[f64]) -> Result<(Mat, Mat)> {
        let g = self.phi.jacobian(xs)?;
        Ok((g.rows(0, self.k()).into_owned(), g.rows(self.k(), self.l()).into_owned()))
    }

    fn semi_gradients(&self, xs: &[f64], dir: &[f64]) -> Result<(Mat, Mat)> {
        let g = self.phi.jacobian_semiderivative(xs, dir)?;
        Ok((g.rows(0, self.k()).into_owned(), g.rows(self.k(), self.l()).into_owned()))
    }
}

/// `G(x, σ) = (−x, Φ(x, σ), 0)` and `𝒫(x, σ) = Ω × {0} × T(σ)`.
pub fn compile_constraint_system(cs: &ConstraintSystem) -> Result<(PolyMap, StructuredMapping)> {
    let (k, l, p, q) = (cs.k(), cs.l(), cs.p(), cs.q());
    let neg_x = Mat::from_fn(k, k + l, |r, c| if r == c { -1.0 } else { 0.0 });
    let g = PolyMap::affine(&neg_x, &vec![0.0; k]).stack(&cs.phi)?.stack(&PolyMap::zero(k + l, q))?;
    let r = StructuredMapping::constant_polyhedral(k, cs.omega.product(&ConvexPolyhedron::origin(p).into()));
    Ok((g, StructuredMapping::product(r, cs.t.clone())))
}

/// The compiled mapping `G + 𝒫` with its base point `((x̄, σ̄), 0)`.
pub fn compiled_mapping(cs: &ConstraintSystem, x: &[f64], sigma: &[f64]) -> Result<(StructuredMapping, Vec<f64>, Vec<f64>)> {
    let (g, p) = compile_constraint_system(cs)?;
    let s = StructuredMapping::smooth_plus(g, p)?;
    Ok((s, [x, sigma].concat(), vec![0.0; cs.k() + cs.p() + cs.q()]))
}

/// `D*(G + 𝒫)((x̄, σ̄)|0)` from the closed form: `(α, β, γ) ↦ (−α + ∇ₓΦ β, ∇_σΦ β + χ)`
/// with `−α ∈ N_Ω(x̄)` and `χ ∈ D*T(σ̄|0)(γ)`.
pub fn compiled_coderivative(cs: &ConstraintSystem, x: &[f64], sigma: &[f64], cfg: &Config) -> Result<HomogeneousPiecewiseMap> {
    cs.check_solution(x, sigma, cfg)?;
    let (k, l, p, q) = (cs.k(), cs.l(), cs.p(), cs.q());
    let xs = [x, sigma].concat();
    let (gx, gs) = cs.gradients(&xs)?;
    let n_omega = ClosedSet::Polyhedral(cs.omega.clone()).normal_cone(x, cfg)?;
    let dt = gendiff::coderivative(&cs.t, sigma, &vec![0.0; q], cfg)?;
    let mut sys = ConeSystem::new();
    let alpha = sys.block(k);
    let beta = sys.block(p);
    let gamma = sys.block(q);
    let vx = sys.block(k);
    let vs = sys.block(l);
    let chi = sys.block(l);
    sys.member(&n_omega.negated(), &alpha)?;
    sys.member(&dt.graph, &[gamma.clone(), chi.clone()].concat())?;
    let ik = Mat::identity(k, k);
    let il = Mat::identity(l, l);
    sys.equation(&[(&(-ik.clone()), &vx), (&(-ik), &alpha), (&gx, &beta)])?;
    sys.equation(&[(&(-il.clone()), &vs), (&gs, &beta), (&il, &chi)])?;
    let keep: Vec<usize> = (0..k + p + q + k + l).collect();
    HomogeneousPiecewiseMap::new(k + p + q, k + l, sys.project(&keep, cfg)?)
}

fn check_of(id: &'static str, sys: &ConeSystem, coords: &[usize], report: &[usize], cfg: &Config) -> Result<ConditionCheck> {
    let w = sys.nonzero_in(coords, cfg)?;
    Ok(ConditionCheck { id, holds: w.is_none(), witness: w.map(|s| report.iter().map(|&i| s[i]).collect()) })
}

fn trace(v: &mut RegularityVerdict, id: &str, result: impl Into<String>) {
    v.trace.push(TraceEntry { id: id.to_string(), result: result.into() });
}

fn holds_str(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

/// Metric regularity of `G + 𝒫` by the dual condition with `D*T` and its
/// variant with `rge D*T` plus metric regularity of `T`; the two must agree.
pub fn cs_metric_regularity(cs: &ConstraintSystem, x: &[f64], sigma: &[f64], cfg: &Config) -> Result<RegularityVerdict> {
    cs.check_solution(x, sigma, cfg)?;
    let (k, l, p, q) = (cs.k(), cs.l(), cs.p(), cs.q());
    let xs = [x, sigma].concat();
    let (gx, gs) = cs.gradients(&xs)?;
    let n_omega = ClosedSet::Polyhedral(cs.omega.clone()).normal_cone(x, cfg)?;
    let dt = gendiff::coderivative(&cs.t, sigma, &vec![0.0; q], cfg)?;
    let ik = Mat::identity(k, k);
    let il = Mat::identity(l, l);

    let mut b = ConeSystem::new();
    let z = b.block(p);
    let nu = b.block(q);
    let n1 = b.block(k);
    let chi = b.block(l);
    b.equation(&[(&gx, &z), (&ik, &n1)])?;
    b.member(&n_omega, &n1)?;
    b.equation(&[(&gs, &z), (&il, &chi)])?;
    b.member(&dt.graph, &[nu.clone(), chi.clone()].concat())?;
    let zn: Vec<usize> = z.iter().chain(&nu).copied().collect();
    let cb = check_of("Prop(7.1)(b)", &b, &zn, &zn, cfg)?;

    let t_regular = gendiff::coderivative_kernel(&dt, cfg)?.is_trivial(cfg);
    let rge = dt.rge(cfg).0;
    let mut c = ConeSystem::new();
    let z2 = c.block(p);
    let n2 = c.block(k);
    let r2 = c.block(l);
    c.equation(&[(&gx, &z2), (&ik, &n2)])?;
    c.member(&n_omega, &n2)?;
    c.equation(&[(&gs, &z2), (&il, &r2)])?;
    c.member(&rge, &r2)?;
    let cc = check_of("Prop(7.1)(c)", &c, &z2, &z2, cfg)?;
    let c_holds = t_regular && cc.holds;
    if cb.holds != c_holds {
        return Err(Error::Inconsistency("dual conditions with D*T and rge D*T disagree".into()));
    }

    let (s, u, y) = compiled_mapping(cs, x, sigma)?;
    let mut v = RegularityVerdict {
        property: Property::MetricRegular,
        u,
        y,
        direction: None,
        eta: None,
        status: if cb.holds { VerdictStatus::CertifiedYes } else { VerdictStatus::CertifiedNo },
        modulus: None,
        witness: cb.witness.clone(),
        trace: vec![],
    };
    trace(&mut v, cb.id, holds_str(cb.holds));
    trace(&mut v, "Prop(7.1)(c)", format!("T metrically regular: {t_regular}; implication {}", holds_str(cc.holds)));
    if cb.holds {
        if let Ok(r) = crate::lsv::reg_value(&s, &v.u, &v.y, cfg) {
            v.modulus = Some(1.0 / r.value);
        }
    }
    Ok(v)
}

fn unit(w: &[f64]) -> Result<Vec<f64>> {
    let n = linalg::norm(w);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Validation("direction must be nonzero".into()));
    }
    Ok(linalg::scale(w, 1.0 / n))
}

/// Sufficient condition for metric 2-regularity of `G + 𝒫` relative to `(w, μ)`
/// with polyhedral `Ω` and `T`; both forms are evaluated and must agree.
pub fn cs_metric2_regularity_polyhedral(
    cs: &ConstraintSystem,
    x: &[f64],
    sigma: &[f64],
    w_mu: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    cs.check_solution(x, sigma, cfg)?;
    if !cs.t.is_polyhedral() {
        return Err(Error::NotPolyhedral("T must have a polyhedral graph".into()));
    }
    let (k, l, p, q) = (cs.k(), cs.l(), cs.p(), cs.q());
    check_dim("direction", k + l, w_mu.len())?;
    let dir = unit(w_mu)?;
    let zero_q = vec![0.0; q];
    let dtt = gendiff::graphical_derivative(&cs.t, sigma, &zero_q, cfg)?;
    if dtt.value_at(&dir[k..])?.is_empty(cfg) {
        return Err(Error::DirectionNotInDomain);
    }
    let xs = [x, sigma].concat();
    let (gx, gs) = cs.gradients(&xs)?;
    let (gxp, gsp) = cs.semi_gradients(&xs, &dir)?;
    let n_omega = ClosedSet::Polyhedral(cs.omega.clone()).normal_cone(x, cfg)?;
    let dt = gendiff::coderivative(&cs.t, sigma, &zero_q, cfg)?;
    let rge = dt.rge(cfg).0;
    let ik = Mat::identity(k, k);
    let il = Mat::identity(l, l);

    // (a): memberships in gph D*T
    let mut a = ConeSystem::new();
    let z = a.block(p);
    let nu = a.block(q);
    let beta = a.block(p);
    let gamma = a.block(q);
    let [n1, n2] = [a.block(k), a.block(k)];
    let [c1, c2] = [a.block(l), a.block(l)];
    a.equation(&[(&gx, &z), (&ik, &n1)])?;
    a.member(&n_omega, &n1)?;
    a.equation(&[(&gs, &z), (&il, &c1)])?;
    a.member(&dt.graph, &[nu.clone(), c1.clone()].concat())?;
    a.equation(&[(&gxp, &z), (&gx, &beta), (&ik, &n2)])?;
    a.member(&n_omega, &n2)?;
    a.equation(&[(&gsp, &z), (&gs, &beta), (&il, &c2)])?;
    a.member(&dt.graph, &[gamma.clone(), c2.clone()].concat())?;
    let zn: Vec<usize> = z.iter().chain(&nu).copied().collect();
    let ca = check_of("Prop(7.2)(a)", &a, &zn, &zn, cfg)?;

    // (b): memberships in rge D*T
    let mut b = ConeSystem::new();
    let z2 = b.block(p);
    let beta2 = b.block(p);
    let [m1, m2] = [b.block(k), b.block(k)];
    let [r1, r2] = [b.block(l), b.block(l)];
    b.equation(&[(&gx, &z2), (&ik, &m1)])?;
    b.member(&n_omega, &m1)?;
    b.equation(&[(&gs, &z2), (&il, &r1)])?;
    b.member(&rge, &r1)?;
    b.equation(&[(&gxp, &z2), (&gx, &beta2), (&ik, &m2)])?;
    b.member(&n_omega, &m2)?;
    b.equation(&[(&gsp, &z2), (&gs, &beta2), (&il, &r2)])?;
    b.member(&rge, &r2)?;
    let cb = check_of("Prop(7.2)(b)", &b, &z2, &z2, cfg)?;
    let t_regular = gendiff::coderivative_kernel(&dt, cfg)?.is_trivial(cfg);
    let b_holds = t_regular && cb.holds;
    if ca.holds != b_holds {
        return Err(Error::Inconsistency("the two polyhedral sufficient conditions disagree".into()));
    }

    let (_, u, y) = compiled_mapping(cs, x, sigma)?;
    let mut v = RegularityVerdict {
        property: Property::Metric2Regular,
        u,
        y,
        direction: Some(dir),
        eta: None,
        status: if ca.holds { VerdictStatus::SufficientConditionHolds } else { VerdictStatus::SufficientConditionFails },
        modulus: None,
        witness: ca.witness.clone(),
        trace: vec![],
    };
    trace(&mut v, ca.id, holds_str(ca.holds));
    trace(&mut v, "Prop(7.2)(b)", format!("T metrically regular: {t_regular}; implication {}", holds_str(cb.holds)));
    if ca.holds {
        trace(&mut v, "Thm(6.3)", "Gfrerer regular for every eta");
    }
    Ok(v)
}

/// `G̃(x, σ) = (Φ(x, σ), 0)` and `𝒫̃(x, σ) = {0} × T(σ)`.
pub fn compile_unconstrained(cs: &ConstraintSystem) -> Result<(PolyMap, StructuredMapping, StructuredMapping)> {
    let (k, l, p, q) = (cs.k(), cs.l(), cs.p(), cs.q());
    let g = cs.phi.stack(&PolyMap::zero(k + l, q))?;
    let r = StructuredMapping::constant_polyhedral(k, ConvexPolyhedron::origin(p).into());
    Ok((g, r, cs.t.clone()))
}

/// Sufficient condition for metric 2-regularity of `G̃ + 𝒫̃` when `Ω = ℝ^k`.
/// Hypothesis failures are refusals: `ConditionFailed("Lipschitz-like")`,
/// `ConditionFailed("metric regularity")` or `ConditionFailed("Eq(7.11)")`.
pub fn cs_metric2_regularity_unconstrained(
    cs: &ConstraintSystem,
    x: &[f64],
    sigma: &[f64],
    w_mu: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    cs.check_solution(x, sigma, cfg)?;
    if !cs.omega_is_universe() {
        return Err(Error::Validation("Ω must be the whole space".into()));
    }
    let (k, l, p, q) = (cs.k(), cs.l(), cs.p(), cs.q());
    check_dim("direction", k + l, w_mu.len())?;
    let dir = unit(w_mu)?;
    let zero_q = vec![0.0; q];
    if gendiff::graphical_derivative(&cs.t, sigma, &zero_q, cfg)?.value_at(&dir[k..])?.is_empty(cfg) {
        return Err(Error::DirectionNotInDomain);
    }
    let dt = gendiff::coderivative(&cs.t, sigma, &zero_q, cfg)?;
    if !dt.value_at_zero(cfg)?.is_trivial(cfg) {
        return Err(Error::ConditionFailed("Lipschitz-like".into()));
    }
    if !gendiff::coderivative_kernel(&dt, cfg)?.is_trivial(cfg) {
        return Err(Error::ConditionFailed("metric regularity".into()));
    }
    let xs = [x, sigma].concat();
    let (gx, gs) = cs.gradients(&xs)?;
    let (gxp, gsp) = cs.semi_gradients(&xs, &dir)?;
    let rge = dt.rge(cfg).0;
    if !crate::lsv::subspace_of_range(&gs)?.intersect(&rge, cfg)?.is_trivial(cfg) {
        return Err(Error::ConditionFailed("Eq(7.11)".into()));
    }
    let il = Mat::identity(l, l);
    let mut sys = ConeSystem::new();
    let z = sys.block(p);
    let beta = sys.block(p);
    let [r1, r2] = [sys.block(l), sys.block(l)];
    sys.equation(&[(&gx, &z)])?;
    sys.equation(&[(&gs, &z), (&il, &r1)])?;
    sys.member(&rge, &r1)?;
    sys.equation(&[(&gxp, &z), (&gx, &beta)])?;
    sys.equation(&[(&gsp, &z), (&gs, &beta), (&il, &r2)])?;
    sys.member(&rge, &r2)?;
    let check = check_of("Eq(7.12)", &sys, &z, &z, cfg)?;

    let (g, _, _) = compile_unconstrained(cs)?;
    let y = linalg::add(&g.evaluate(&xs)?, &vec![0.0; p + q]);
    let mut v = RegularityVerdict {
        property: Property::Metric2Regular,
        u: xs,
        y,
        direction: Some(dir),
        eta: None,
        status: if check.holds { VerdictStatus::SufficientConditionHolds } else { VerdictStatus::SufficientConditionFails },
        modulus: None,
        witness: check.witness.clone(),
        trace: vec![],
    };
    trace(&mut v, "Prop(7.3)", "T Lipschitz-like and metrically regular; Eq(7.11) holds");
    trace(&mut v, check.id, holds_str(check.holds));
    if check.holds {
        trace(&mut v, "Thm(6.3)", "Gfrerer regular for every eta");
    }
    Ok(v)
}

/// The same instance through the product-mapping check.
pub fn cs_unconstrained_via_product(
    cs: &ConstraintSystem,
    x: &[f64],
    sigma: &[f64],
    w_mu: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    cs.check_solution(x, sigma, cfg)?;
    let (g, r, t) = compile_unconstrained(cs)?;
    let y = vec![0.0; cs.p() + cs.q()];
    sufficient_m2r_product(&g, &r, &t, &[x, sigma].concat(), &y, w_mu, cfg)
}

// ---------------------------------------------------------------- variational systems

/// `0 ∈ f(x) + ℳ(x) N_{C₀}(g(x))` with `f: ℝ^k → ℝ^s`, `g: ℝ^k → ℝ^q`,
/// `ℳ: ℝ^k → ℝ^{s×q}` stored row-major (`s·q` components), convex polyhedral `C₀ ⊂ ℝ^q`.
#[derive(Debug, Clone)]
pub struct VariationalSystem {
    pub f: PolyMap,
    pub g: PolyMap,
    pub m: PolyMap,
    pub c0: ConvexPolyhedron,
}

impl VariationalSystem {
    pub fn new(f: PolyMap, g: PolyMap, m: PolyMap, c0: ConvexPolyhedron) -> Result<Self> {
        let (k, s, q) = (f.in_dim(), f.out_dim(), g.out_dim());
        check_dim("g inputs", k, g.in_dim())?;
        check_dim("ℳ inputs", k, m.in_dim())?;
        check_dim("ℳ entries", s * q, m.out_dim())?;
        check_dim("C₀", q, c0.dim())?;
        Ok(VariationalSystem { f, g, m, c0 })
    }

    /// KKT form: `ℳ = ∇g`, `C₀ = ℝ₋^t × {0}^{q−t}`.
    pub fn kkt(f: PolyMap, g: PolyMap, inequalities: usize) -> Result<Self> {
        let (k, q) = (g.in_dim(), g.out_dim());
        check_dim("f outputs", k, f.out_dim())?;
        if inequalities > q {
            return Err(Error::Validation("more inequalities than constraints".into()));
        }
        let mut comps: Vec<Vec<Term>> = Vec::with_capacity(k * q);
        for r in 0..k {
            let d = g.partial_derivative(r)?;
            comps.extend(d.components().iter().cloned());
        }
        let m = PolyMap::new(k, comps)?;
        let eq: Vec<(Vec<f64>, f64)> = (inequalities..q).map(|j| (crate::polyhedra::unit(q, j, 1.0), 0.0)).collect();
        let c0 = ConvexPolyhedron::nonpos(q, &(0..inequalities).collect::<Vec<_>>()).with_rows(vec![], eq);
        Self::new(f, g, m, c0)
    }

    pub fn k(&self) -> usize {
        self.f.in_dim()
    }
    pub fn s(&self) -> usize {
        self.f.out_dim()
    }
    pub fn q(&self) -> usize {
        self.g.out_dim()
    }

    /// `ℳ(x)`, `s × q`.
    pub fn m_at(&self, x: &[f64]) -> Result<Mat> {
        let v = self.m.evaluate(x)?;
        Ok(Mat::from_row_slice(self.s(), self.q(), &v))
    }

    /// `ℳ′(x) w`, `s × q`.
    fn m_dir(&self, x: &[f64], w: &[f64]) -> Result<Mat> {
        let v = self.m.derivative_apply(x, w)?;
        Ok(Mat::from_row_slice(self.s(), self.q(), &v))
    }

    /// Column `i` of `ℳ` as a map `ℝ^k → ℝ^s`.
    fn m_column(&self, i: usize) -> Result<PolyMap> {
        let q = self.q();
        PolyMap::new(self.k(), (0..self.s()).map(|r| self.m.components()[r * q + i].clone()).collect())
    }

    fn normal_map(&self) -> StructuredMapping {
        StructuredMapping::NormalConeMap { set: self.c0.clone() }
    }

    pub fn check_solution(&self, x: &[f64], lambda: &[f64], zeta: &[f64], cfg: &Config) -> Result<()> {
        check_dim("x", self.k(), x.len())?;
        check_dim("λ", self.q(), lambda.len())?;
        check_dim("ζ", self.q(), zeta.len())?;
        let r = linalg::add(&self.f.evaluate(x)?, &linalg::mat_vec(&self.m_at(x)?, lambda));
        if linalg::norm_inf(&r) > SOLUTION_TOL {
            return Err(Error::NotASolution(format!("|f + ℳλ| = {:.3e}", linalg::norm_inf(&r))));
        }
        if linalg::norm_inf(&linalg::sub(&self.g.evaluate(x)?, zeta)) > SOLUTION_TOL {
            return Err(Error::NotASolution("ζ ≠ g(x)".into()));
        }
        if !self.normal_map().contains_graph(zeta, lambda, cfg) {
            return Err(Error::NotASolution("λ is not normal to C₀ at ζ".into()));
        }
        Ok(())
    }

    /// `A = ∇f(x̄) + Σ λ̄ᵢ ∇ℳᵢ(x̄)`, `k × s`.
    fn a_matrix(&self, x: &[f64], lambda: &[f64]) -> Result<Mat> {
        let mut a = self.f.jacobian(x)?;
        for (i, &li) in lambda.iter().enumerate() {
            if li != 0.0 {
                a += self.m_column(i)?.jacobian(x)? * li;
            }
        }
        Ok(a)
    }

    /// `D*N_{C₀}(ζ̄|λ̄)`, graph in `(α, χ)`.
    fn normal_coderivative(&self, zeta: &[f64], lambda: &[f64], cfg: &Config) -> Result<HomogeneousPiecewiseMap> {
        gendiff::coderivative(&self.normal_map(), zeta, lambda, cfg)
    }

    /// True when `∇ℳᵢ(x̄) = 0` for every column.
    fn m_locally_constant(&self, x: &[f64]) -> Result<bool> {
        for i in 0..self.q() {
            if self.m_column(i)?.jacobian(x)?.amax() != 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `Φ(x, λ, ζ) = (f(x) + ℳ(x) λ, g(x) − ζ)`, `T(λ, ζ) = −λ + N_{C₀}(ζ)`, `Ω = ℝ^k`.
pub fn compile_variational_system(vs: &VariationalSystem, cfg: &Config) -> Result<ConstraintSystem> {
    let (k, s, q) = (vs.k(), vs.s(), vs.q());
    let total = k + 2 * q;
    let xs: Vec<usize> = (0..k).collect();
    let f = vs.f.embed_inputs(total, &xs);
    let m = vs.m.embed_inputs(total, &xs);
    let mut comps: Vec<Vec<Term>> = Vec::with_capacity(s + q);
    for i in 0..s {
        let mut c = f.components()[i].clone();
        for j in 0..q {
            let lam = vec![Term { coeff: 1.0, exps: (0..total).map(|t| (t == k + j) as u32).collect() }];
            c.extend(PolyMap::mul_scalar_poly(&m.components()[i * q + j], &lam));
        }
        comps.push(c);
    }
    let g = vs.g.embed_inputs(total, &xs);
    for j in 0..q {
        let mut c = g.components()[j].clone();
        c.push(Term { coeff: -1.0, exps: (0..total).map(|t| (t == k + q + j) as u32).collect() });
        comps.push(c);
    }
    let phi = PolyMap::new(total, comps)?;

    let ngraph = vs.normal_map().graph(cfg)?;
    let lifted = ngraph.embed(3 * q, &(q..3 * q).collect::<Vec<_>>());
    let n_of_zeta = StructuredMapping::GraphPolyhedral { in_dim: 2 * q, out_dim: q, graph: lifted };
    let neg_lambda = Mat::from_fn(q, 2 * q, |r, c| if r == c { -1.0 } else { 0.0 });
    let t = StructuredMapping::smooth_plus(PolyMap::affine(&neg_lambda, &vec![0.0; q]), n_of_zeta)?;
    ConstraintSystem::new(phi, PolyhedralSet::universe(k), t)
}

/// Metric regularity of the compiled variational system from
/// `0 ∈ A z + ∇g(x̄) D*N_{C₀}(ζ̄|λ̄)(ℳ(x̄)ᵀ z) ⟹ z = 0`.
pub fn vs_metric_regularity(
    vs: &VariationalSystem,
    x: &[f64],
    lambda: &[f64],
    zeta: &[f64],
    cfg: &Config,
) -> Result<RegularityVerdict> {
    vs.check_solution(x, lambda, zeta, cfg)?;
    let (s, q) = (vs.s(), vs.q());
    let a = vs.a_matrix(x, lambda)?;
    let gg = vs.g.jacobian(x)?;
    let mt = vs.m_at(x)?.transpose();
    let dn = vs.normal_coderivative(zeta, lambda, cfg)?;
    let mut sys = ConeSystem::new();
    let z = sys.block(s);
    let al = sys.block(q);
    let chi = sys.block(q);
    sys.equation(&[(&Mat::identity(q, q), &al), (&(-mt), &z)])?;
    sys.member(&dn.graph, &[al.clone(), chi.clone()].concat())?;
    sys.equation(&[(&a, &z), (&gg, &chi)])?;
    let check = check_of("Prop(8.2)(b)", &sys, &z, &z, cfg)?;
    let xs = [x, lambda, zeta].concat();
    let mut v = RegularityVerdict {
        property: Property::MetricRegular,
        y: vec![0.0; xs.len() + s],
        u: xs,
        direction: None,
        eta: None,
        status: if check.holds { VerdictStatus::CertifiedYes } else { VerdictStatus::CertifiedNo },
        modulus: None,
        witness: check.witness.clone(),
        trace: vec![],
    };
    trace(&mut v, "Lem(8.1)", "T metrically regular (granted)");
    trace(&mut v, check.id, holds_str(check.holds));
    Ok(v)
}

/// The sufficient condition for metric 2-regularity relative to `(w, α, v)`,
/// evaluated for each `α` of the sweep. Without `alphas` the sweep is `0`,
/// `±eᵢ` and 8 random unit vectors, or only `0` when the `α` terms vanish.
///
/// A finite sweep cannot certify "for all α" when the `α` terms are present;
/// the verdict is then `NumericEvidenceFor` rather than `SufficientConditionHolds`.
pub fn vs_metric2_regularity(
    vs: &VariationalSystem,
    x: &[f64],
    lambda: &[f64],
    zeta: &[f64],
    w: &[f64],
    v_dir: &[f64],
    alphas: Option<&[Vec<f64>]>,
    cfg: &Config,
) -> Result<RegularityVerdict> {
    vs.check_solution(x, lambda, zeta, cfg)?;
    let (k, s, q) = (vs.k(), vs.s(), vs.q());
    check_dim("w", k, w.len())?;
    check_dim("v", q, v_dir.len())?;
    if linalg::norm(w) == 0.0 && linalg::norm(v_dir) == 0.0 {
        return Err(Error::Validation("(w, v) must be nonzero".into()));
    }
    let dnn = gendiff::graphical_derivative(&vs.normal_map(), zeta, lambda, cfg)?;
    if dnn.value_at(v_dir)?.is_empty(cfg) {
        return Err(Error::DirectionNotInDomain);
    }
    let constant_m = vs.m_locally_constant(x)?;
    let sweep: Vec<Vec<f64>> = match alphas {
        Some(a) => a.to_vec(),
        None if constant_m => vec![vec![0.0; q]],
        None => {
            let mut out = vec![vec![0.0; q]];
            for i in 0..q {
                for sgn in [1.0, -1.0] {
                    out.push(crate::polyhedra::unit(q, i, sgn));
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for _ in 0..ALPHA_RANDOM {
                out.push(linalg::random_unit(&mut rng, q));
            }
            out
        }
    };
    for a in &sweep {
        check_dim("α", q, a.len())?;
    }

    let a_mat = vs.a_matrix(x, lambda)?;
    let gg = vs.g.jacobian(x)?;
    let ggp = vs.g.jacobian_semiderivative(x, w)?;
    let mt = vs.m_at(x)?.transpose();
    let dw = vs.m_dir(x, w)?.transpose();
    let dn = vs.normal_coderivative(zeta, lambda, cfg)?;
    let mut base_b = vs.f.jacobian_semiderivative(x, w)?;
    let mut grads = Vec::with_capacity(q);
    for i in 0..q {
        let col = vs.m_column(i)?;
        base_b += col.jacobian_semiderivative(x, w)? * lambda[i];
        grads.push(col.jacobian(x)?);
    }
    let iq = Mat::identity(q, q);

    let xs = [x, lambda, zeta].concat();
    let mut verdict = RegularityVerdict {
        property: Property::Metric2Regular,
        y: vec![0.0; xs.len() + s],
        u: xs,
        direction: None,
        eta: None,
        status: VerdictStatus::SufficientConditionHolds,
        modulus: None,
        witness: None,
        trace: vec![],
    };
    trace(&mut verdict, "Lem(8.1)", "T metrically regular (granted)");
    for alpha in &sweep {
        let mut b = base_b.clone();
        for (i, &ai) in alpha.iter().enumerate() {
            b += &grads[i] * ai;
        }
        let mut sys = ConeSystem::new();
        let z = sys.block(s);
        let chi = sys.block(q);
        let a1 = sys.block(q);
        let beta = sys.block(s);
        let a2 = sys.block(q);
        let chi2 = sys.block(q);
        sys.equation(&[(&a_mat, &z), (&gg, &chi)])?;
        sys.equation(&[(&iq, &a1), (&(-mt.clone()), &z)])?;
        sys.member(&dn.graph, &[a1.clone(), chi.clone()].concat())?;
        sys.equation(&[(&b, &z), (&ggp, &chi), (&a_mat, &beta), (&gg, &chi2)])?;
        sys.equation(&[(&iq, &a2), (&(-mt.clone()), &beta), (&(-dw.clone()), &z)])?;
        sys.member(&dn.graph, &[a2.clone(), chi2.clone()].concat())?;
        let zc: Vec<usize> = z.iter().chain(&chi).copied().collect();
        let check = check_of("Prop(8.3)", &sys, &zc, &zc, cfg)?;
        trace(&mut verdict, check.id, format!("alpha = {alpha:?}: {}", holds_str(check.holds)));
        if !check.holds {
            verdict.status = VerdictStatus::SufficientConditionFails;
            verdict.witness = check.witness;
            verdict.direction = Some([w, alpha, v_dir].concat());
            return Ok(verdict);
        }
    }
    verdict.direction = Some([w, &vec![0.0; q][..], v_dir].concat());
    if !constant_m || alphas.is_some() {
        verdict.status = VerdictStatus::NumericEvidenceFor;
        trace(&mut verdict, "Prop(8.3)", "finite alpha sweep stands in for every alpha");
    }
    Ok(verdict)
}

/// `T` of a compiled variational system is metrically regular at `((λ̄, ζ̄), 0)`.
pub fn lemma_t_regular(vs: &VariationalSystem, lambda: &[f64], zeta: &[f64], cfg: &Config) -> Result<bool> {
    let cs = compile_variational_system(vs, cfg)?;
    let v = check_metric_regularity(&cs.t, &[lambda, zeta].concat(), &vec![0.0; vs.q()], cfg)?;
    Ok(v.status == VerdictStatus::CertifiedYes)
}

/// Subspace cone helper for callers composing their own systems.
pub fn range_cone(m: &Mat) -> Result<PolyhedralCone> {
    crate::lsv::subspace_of_range(m)
}

#[cfg(test)]
mod tests;
