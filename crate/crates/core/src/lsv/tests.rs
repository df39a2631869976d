use std::sync::Arc;

use super::*;
use crate::polyhedra::ConvexPolyhedron as P;

fn cfg() -> Config {
    Config::default()
}

fn row(v: &[f64], b: f64) -> (Vec<f64>, f64) {
    (v.to_vec(), b)
}

/// Γ(0, z) = {0, −1} on z ∈ {0} × ℝ₋, empty elsewhere; 𝒜 ≡ (1, 0).
fn two_valued() -> LsvInstance {
    let piece = |eta: f64| {
        P::new(4, vec![row(&[0.0, 0.0, 1.0, 0.0], 0.0)], vec![
            row(&[1.0, 0.0, 0.0, 0.0], 0.0),
            row(&[0.0, 1.0, 0.0, 0.0], 0.0),
            row(&[0.0, 0.0, 0.0, 1.0], eta),
        ])
        .unwrap()
    };
    let g = PolyhedralSet::new(4, vec![piece(0.0), piece(-1.0)]).unwrap();
    let gamma = GammaFamily::jointly_polyhedral(1, 2, 1, g).unwrap();
    let a = MatrixField::constant(Mat::from_row_slice(1, 2, &[1.0, 0.0]), 1);
    LsvInstance::new(ClosedSet::Polyhedral(PolyhedralSet::universe(1)), a, gamma).unwrap()
}

/// 𝒜 ≡ 0, Γ(ξ, z) = N_{ℝ₊}(ξ) on 𝒟 = ℝ₊, no calmness constant supplied.
fn normal_cone_family() -> LsvInstance {
    let eval: GraphFn = Arc::new(|xi: &[f64]| {
        if xi[0] < -1e-12 {
            return Ok(None);
        }
        let p = if xi[0] <= 1e-12 { P::nonpos(2, &[1]) } else { P::new(2, vec![], vec![row(&[0.0, 1.0], 0.0)])? };
        Ok(Some(p.into()))
    });
    let gamma = GammaFamily::general(1, 1, true, true, None, eval);
    let a = MatrixField::constant(Mat::zeros(1, 1), 1);
    LsvInstance::new(ClosedSet::Polyhedral(P::nonneg(1, &[0]).into()), a, gamma).unwrap()
}

/// 𝒜(ξ) = (ξ, ξ²), Γ(ξ, z) = {−ξ} on z ∈ ℝ × {0}.
fn drifting() -> LsvInstance {
    let g: PolyhedralSet =
        P::new(4, vec![], vec![row(&[0.0, 0.0, 1.0, 0.0], 0.0), row(&[1.0, 0.0, 0.0, 1.0], 0.0)]).unwrap().into();
    let gamma = GammaFamily::jointly_polyhedral(1, 2, 1, g).unwrap();
    let a = MatrixField::from_poly(PolyMap::parse(1, &["x1", "x1^2"]).unwrap(), 1, 2).unwrap();
    LsvInstance::new(ClosedSet::Polyhedral(PolyhedralSet::universe(1)), a, gamma).unwrap()
}

#[test]
fn drifting_zero_set_is_two_points() {
    let r = drifting().singularity_report(&[0.0], &cfg()).unwrap();
    assert!(r.is_singular);
    assert_eq!(r.lsv_value, 0.0);
    let pts = r.unit_points.unwrap();
    assert_eq!(pts.len(), 2);
    assert!((pts[0][0] + 1.0).abs() < 1e-12 && pts[0][1].abs() < 1e-12);
    assert!((pts[1][0] - 1.0).abs() < 1e-12 && pts[1][1].abs() < 1e-12);
}

#[test]
fn drifting_subderivative_is_zero() {
    let inst = drifting();
    let c = cfg();
    let phi = |xi: &[f64]| Ok(inst.lsv_value(xi, &c)?.value);
    let e = subderivative_estimate(&phi, &[0.0], &[1.0], &SUBDERIVATIVE_SCHEDULE, None, &c).unwrap();
    assert!(e.value.abs() <= 1e-6, "{e:?}");
}

#[test]
fn drifting_certifiers() {
    let inst = drifting();
    let calm = lower_bound_calm(&inst, &[0.0], &[1.0], &cfg()).unwrap();
    assert_eq!(calm.c, Some(1.0));
    assert!(calm.bound.unwrap().abs() < 1e-9, "{calm:?}");
    let conic = lower_bound_conic(&inst, &[0.0], &[1.0], &cfg()).unwrap();
    assert_eq!(conic.refused.as_deref(), Some("(iv')"), "{conic:?}");
}

#[test]
fn two_valued_certifiers() {
    let inst = two_valued();
    let calm = lower_bound_calm(&inst, &[0.0], &[1.0], &cfg()).unwrap();
    assert_eq!(calm.refused, None, "{calm:?}");
    assert_eq!(calm.c, Some(0.0));
    assert!(calm.bound.unwrap().abs() < 1e-9);
    let conic = lower_bound_conic(&inst, &[0.0], &[1.0], &cfg()).unwrap();
    assert_eq!(conic.refused.as_deref(), Some("(v')"), "{conic:?}");
}

#[test]
fn normal_cone_certifiers() {
    let inst = normal_cone_family();
    let calm = lower_bound_calm(&inst, &[0.0], &[1.0], &cfg()).unwrap();
    assert_eq!(calm.refused.as_deref(), Some("(v)"), "{calm:?}");
    let conic = lower_bound_conic(&inst, &[0.0], &[1.0], &cfg()).unwrap();
    assert_eq!(conic.refused, None, "{conic:?}");
    assert!(conic.bound.unwrap().abs() < 1e-9);
    assert!(!conic.evidence_only);
}

#[test]
fn nonsingular_point_is_refused_at_i() {
    let g: PolyhedralSet = P::new(3, vec![], vec![row(&[0.0, 0.0, 1.0], 0.0)]).unwrap().into();
    let gamma = GammaFamily::jointly_polyhedral(1, 1, 1, g).unwrap();
    let a = MatrixField::constant(Mat::identity(1, 1), 1);
    let inst = LsvInstance::new(ClosedSet::Polyhedral(PolyhedralSet::universe(1)), a, gamma).unwrap();
    let out = lower_bound_calm(&inst, &[0.0], &[1.0], &cfg()).unwrap();
    assert_eq!(out.refused.as_deref(), Some("(i)"));
    assert!(!inst.singularity_report(&[0.0], &cfg()).unwrap().is_singular);
}

#[test]
fn positive_bound_when_semiderivative_separates() {
    // 𝒜(ξ) = ξ, Γ ≡ {0}: ℓ(ξ) = |ξ|, so dℓ(0)(ω) = |ω|
    let g: PolyhedralSet = P::new(3, vec![], vec![row(&[0.0, 0.0, 1.0], 0.0)]).unwrap().into();
    let gamma = GammaFamily::jointly_polyhedral(1, 1, 1, g).unwrap();
    let a = MatrixField::from_poly(PolyMap::parse(1, &["x1"]).unwrap(), 1, 1).unwrap();
    let inst = LsvInstance::new(ClosedSet::Polyhedral(PolyhedralSet::universe(1)), a, gamma).unwrap();
    let c = cfg();
    for o in [1.0, -2.0] {
        let both = combined_lower_bound(&inst, &[0.0], &[o], &c).unwrap();
        assert!((both.bound.unwrap() - o.abs()).abs() < 1e-9, "{both:?}");
        let phi = |xi: &[f64]| Ok(inst.lsv_value(xi, &c)?.value);
        let e = subderivative_estimate(&phi, &[0.0], &[o], &SUBDERIVATIVE_SCHEDULE, None, &c).unwrap();
        assert!(both.bound.unwrap() <= e.value + 1e-5);
    }
}

#[test]
fn reg_value_of_square() {
    let s = StructuredMapping::smooth_plus(
        PolyMap::parse(1, &["x1^2"]).unwrap(),
        StructuredMapping::constant_polyhedral(1, PolyhedralSet::from_piece(P::origin(1))),
    )
    .unwrap();
    for u in [-1.0, -0.25, 0.25, 1.0] {
        let r = reg_value(&s, &[u], &[u * u], &cfg()).unwrap();
        assert!((r.value - 2.0 * f64::abs(u)).abs() < 1e-9);
    }
    assert!(reg_value(&s, &[1.0], &[0.0], &cfg()).unwrap().value.is_infinite());
}

#[test]
fn reg_value_of_halfline_indicator() {
    let s = StructuredMapping::indicator_polyhedral(P::nonneg(1, &[0]).into(), 1);
    assert_eq!(reg_value(&s, &[0.0], &[0.0], &cfg()).unwrap().value, 0.0);
    let id = StructuredMapping::smooth_plus(PolyMap::identity(1), StructuredMapping::constant_polyhedral(1, P::origin(1).into()))
        .unwrap();
    assert!((reg_value(&id, &[3.0], &[3.0], &cfg()).unwrap().value - 1.0).abs() < 1e-12);
}

#[test]
fn outer_norm_is_reciprocal() {
    let g = PolyhedralCone::from_piece(
        P::new(2, vec![], vec![row(&[2.0, -1.0], 0.0)]).unwrap(),
    )
    .unwrap();
    let k = HomogeneousPiecewiseMap::new(1, 1, g).unwrap();
    assert!((outer_norm(&k, &cfg()).unwrap() - 0.5).abs() < 1e-12);
    assert!((lsv_of_map(&k, &cfg()).unwrap().value - 2.0).abs() < 1e-12);
}

#[test]
fn coderivative_instance_matches_reg_value() {
    let c0 = StructuredMapping::indicator_polyhedral(P::nonneg(1, &[0]).into(), 1);
    let f = SmoothMap::from(PolyMap::identity(1));
    let inst = coderivative_instance(f.clone(), c0.clone(), &cfg()).unwrap();
    let s = StructuredMapping::smooth_plus(f, c0).unwrap();
    for u in [0.0, 0.1, 1.0] {
        let a = inst.lsv_value(&[u, 0.0], &cfg()).unwrap().value;
        let b = reg_value(&s, &[u], &[u], &cfg()).unwrap().value;
        assert!((a - b).abs() < 1e-12, "{u}: {a} vs {b}");
    }
}
