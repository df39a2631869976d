use super::*;
use crate::polyhedra::ConvexPolyhedron as P;

fn cfg() -> Config {
    Config::default()
}

/// min ½x² s.t. x ≥ 0, written as g(x) = −x ≤ 0.
fn kkt_convex() -> VariationalSystem {
    VariationalSystem::kkt(PolyMap::parse(1, &["x1"]).unwrap(), PolyMap::parse(1, &["-x1"]).unwrap(), 1).unwrap()
}

/// f ≡ 0 with the same constraint.
fn kkt_flat() -> VariationalSystem {
    VariationalSystem::kkt(PolyMap::zero(1, 1), PolyMap::parse(1, &["-x1"]).unwrap(), 1).unwrap()
}

/// Φ(x, σ) = x − σ, Ω = ℝ, T(σ) = σ.
fn linear_cs() -> ConstraintSystem {
    let t = StructuredMapping::smooth_plus(PolyMap::identity(1), StructuredMapping::constant_polyhedral(1, P::origin(1).into())).unwrap();
    ConstraintSystem::new(PolyMap::parse(2, &["x1 - x2"]).unwrap(), PolyhedralSet::universe(1), t).unwrap()
}

/// Φ(x, σ) = x² + σ, Ω = ℝ, T(σ) = σ.
fn square_cs() -> ConstraintSystem {
    let t = StructuredMapping::smooth_plus(PolyMap::identity(1), StructuredMapping::constant_polyhedral(1, P::origin(1).into())).unwrap();
    ConstraintSystem::new(PolyMap::parse(2, &["x1^2 + x2"]).unwrap(), PolyhedralSet::universe(1), t).unwrap()
}

#[test]
fn kkt_builds_gradient_multiplier() {
    let vs = VariationalSystem::kkt(PolyMap::parse(2, &["x1", "x2"]).unwrap(), PolyMap::parse(2, &["x1*x2", "-x1"]).unwrap(), 1).unwrap();
    let m = vs.m_at(&[2.0, 3.0]).unwrap();
    // column j is ∇g_j
    assert_eq!(m[(0, 0)], 3.0);
    assert_eq!(m[(1, 0)], 2.0);
    assert_eq!(m[(0, 1)], -1.0);
    assert_eq!(m[(1, 1)], 0.0);
}

#[test]
fn off_solution_is_rejected() {
    let vs = kkt_convex();
    assert!(matches!(vs.check_solution(&[1.0], &[0.0], &[-1.0], &cfg()), Err(Error::NotASolution(_))));
    let cs = linear_cs();
    assert!(matches!(cs.check_solution(&[1.0], &[0.0], &cfg()), Err(Error::NotASolution(_))));
}

#[test]
fn compiled_coderivative_matches_generic() {
    let cfg = cfg();
    for cs in [linear_cs(), compile_variational_system(&kkt_convex(), &cfg).unwrap()] {
        let x = vec![0.0; cs.k()];
        let sigma = vec![0.0; cs.l()];
        let closed = compiled_coderivative(&cs, &x, &sigma, &cfg).unwrap();
        let (s, u, y) = compiled_mapping(&cs, &x, &sigma).unwrap();
        let generic = gendiff::coderivative(&s, &u, &y, &cfg).unwrap();
        assert!(closed.graph.set_eq(&generic.graph, &cfg));
    }
}

#[test]
fn linear_system_is_metrically_regular() {
    let v = cs_metric_regularity(&linear_cs(), &[0.0], &[0.0], &cfg()).unwrap();
    assert_eq!(v.status, VerdictStatus::CertifiedYes, "{v:?}");
}

#[test]
fn square_system_regularity() {
    let cs = square_cs();
    // ∇ₓΦ vanishes, so z + ν = 0 leaves z free.
    let v = cs_metric_regularity(&cs, &[0.0], &[0.0], &cfg()).unwrap();
    assert_eq!(v.status, VerdictStatus::CertifiedNo);
    // the second-order line 2z = 0 pins it down
    let v2 = cs_metric2_regularity_polyhedral(&cs, &[0.0], &[0.0], &[1.0, 0.0], &cfg()).unwrap();
    assert_eq!(v2.status, VerdictStatus::SufficientConditionHolds);
}

#[test]
fn unconstrained_agrees_with_product_check() {
    let cfg = cfg();
    let cs = square_cs();
    let direct = cs_metric2_regularity_unconstrained(&cs, &[0.0], &[0.0], &[1.0, 0.0], &cfg);
    let product = cs_unconstrained_via_product(&cs, &[0.0], &[0.0], &[1.0, 0.0], &cfg);
    match (direct, product) {
        (Ok(a), Ok(b)) => assert_eq!(a.status.is_positive(), b.status.is_positive(), "{a:?} {b:?}"),
        (Err(a), Err(b)) => assert!(matches!((a, b), (Error::ConditionFailed(_), Error::ConditionFailed(_)))),
        (a, b) => panic!("disagreement: {a:?} vs {b:?}"),
    }
}

#[test]
fn separation_failure_is_a_refusal() {
    // Φ = (σ), T(σ) = N_{ℝ₋}(σ) is not Lipschitz-like at (0, 0).
    let t = StructuredMapping::NormalConeMap { set: P::nonpos(1, &[0]) };
    let cs = ConstraintSystem::new(PolyMap::parse(2, &["x2"]).unwrap(), PolyhedralSet::universe(1), t).unwrap();
    let e = cs_metric2_regularity_unconstrained(&cs, &[0.0], &[0.0], &[1.0, 0.0], &cfg()).unwrap_err();
    assert!(matches!(e, Error::ConditionFailed(_)), "{e:?}");
}

#[test]
fn convex_kkt_is_metrically_regular() {
    let vs = kkt_convex();
    let v = vs_metric_regularity(&vs, &[0.0], &[0.0], &[0.0], &cfg()).unwrap();
    assert_eq!(v.status, VerdictStatus::CertifiedYes, "{v:?}");
    let cs = compile_variational_system(&vs, &cfg()).unwrap();
    let w = cs_metric_regularity(&cs, &[0.0], &[0.0, 0.0], &cfg()).unwrap();
    assert_eq!(w.status, VerdictStatus::CertifiedYes, "{w:?}");
}

#[test]
fn flat_kkt_is_not_metrically_regular() {
    let vs = kkt_flat();
    let v = vs_metric_regularity(&vs, &[0.0], &[0.0], &[0.0], &cfg()).unwrap();
    assert_eq!(v.status, VerdictStatus::CertifiedNo, "{v:?}");
    let cs = compile_variational_system(&vs, &cfg()).unwrap();
    let w = cs_metric_regularity(&cs, &[0.0], &[0.0, 0.0], &cfg()).unwrap();
    assert_eq!(w.status, VerdictStatus::CertifiedNo, "{w:?}");
}

#[test]
fn whole_space_constraint() {
    // C₀ = ℝ: N_{C₀} ≡ {0}, so the system is f(x) = 0.
    let c0 = P::universe(1);
    let vs = VariationalSystem::new(PolyMap::parse(1, &["x1"]).unwrap(), PolyMap::parse(1, &["x1"]).unwrap(), PolyMap::parse(1, &["1"]).unwrap(), c0)
        .unwrap();
    let v = vs_metric_regularity(&vs, &[0.0], &[0.0], &[0.0], &cfg()).unwrap();
    assert_eq!(v.status, VerdictStatus::CertifiedYes);
}

#[test]
fn transition_map_is_regular() {
    assert!(lemma_t_regular(&kkt_convex(), &[0.0], &[0.0], &cfg()).unwrap());
    assert!(lemma_t_regular(&kkt_convex(), &[1.0], &[0.0], &cfg()).unwrap_or(true));
}

#[test]
fn m2r_sweep_on_constant_multiplier() {
    let vs = kkt_convex();
    let v = vs_metric2_regularity(&vs, &[0.0], &[0.0], &[0.0], &[1.0], &[0.0], None, &cfg()).unwrap();
    // ∇g is constant, so α drops out and the single evaluation certifies.
    assert_eq!(v.status, VerdictStatus::SufficientConditionHolds, "{v:?}");
    let flat = vs_metric2_regularity(&kkt_flat(), &[0.0], &[0.0], &[0.0], &[1.0], &[0.0], None, &cfg()).unwrap();
    assert_eq!(flat.status, VerdictStatus::SufficientConditionFails, "{flat:?}");
}

#[test]
fn m2r_sweep_with_curved_constraint() {
    // min ½x² s.t. ½x² − 1 ≤ 0 at x = 0 (inactive, λ = 0): ∇ℳ ≠ 0 so the sweep only gives evidence.
    let vs = VariationalSystem::kkt(PolyMap::parse(1, &["x1"]).unwrap(), PolyMap::parse(1, &["0.5*x1^2 - 1"]).unwrap(), 1).unwrap();
    let v = vs_metric2_regularity(&vs, &[0.0], &[0.0], &[-1.0], &[1.0], &[0.0], None, &cfg()).unwrap();
    assert_eq!(v.status, VerdictStatus::NumericEvidenceFor, "{v:?}");
}
