//! The twelve acceptance criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so the lines always reach the terminal.

use std::time::{Duration, Instant};

use lsvreg::gendiff;
use lsvreg::lsv::{
    lower_bound_calm, lower_bound_conic, lsv_of_map, outer_norm, reg_value, subderivative_estimate, GammaFamily, GraphFn,
    LsvInstance, MatrixField, SUBDERIVATIVE_SCHEDULE,
};
use lsvreg::polyhedra::{ConvexPolyhedron as P, PolyhedralCone, PolyhedralSet};
use lsvreg::regularity::{
    check_gfrerer, check_metric2_regularity, check_metric_regularity, constant_set_condition, constant_set_range_condition,
    curve_falsifier, indicator_condition, range_normal_separation, reg_chain, span_tangent_condition, VerdictStatus,
};
use lsvreg::setmaps::{ClosedSet, HomogeneousPiecewiseMap, StructuredMapping};
use lsvreg::smoothmaps::{PolyMap, SmoothMap};
use lsvreg::systems::{
    cs_metric2_regularity_polyhedral, cs_metric_regularity, lemma_t_regular, vs_metric_regularity, ConstraintSystem,
    VariationalSystem,
};
use lsvreg::{Config, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn cfg() -> Config {
    Config::default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn row(v: &[f64], b: f64) -> (Vec<f64>, f64) {
    (v.to_vec(), b)
}

fn origin_set(n: usize) -> StructuredMapping {
    StructuredMapping::constant_polyhedral(n, P::origin(n).into())
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("took {:.2}s, limit {limit}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 1

fn halfline_indicator() -> Outcome {
    let start = Instant::now();
    let c = cfg();
    let half: PolyhedralSet = P::nonneg(1, &[0]).into();
    let s = StructuredMapping::smooth_plus(PolyMap::identity(1), StructuredMapping::indicator_polyhedral(half.clone(), 1)).map_err(e2s)?;
    for u in [0.1, 0.5, 1.0] {
        let r = reg_value(&s, &[u], &[u], &c).map_err(e2s)?.value;
        ensure((r - 1.0).abs() <= 1e-9, || format!("Reg at u = {u} is {r}"))?;
    }
    let f = SmoothMap::from(PolyMap::identity(1));
    let c55 = indicator_condition(&f, &ClosedSet::Polyhedral(half.clone()), &[0.0], &[1.0], &c).map_err(e2s)?;
    ensure(!c55.holds, || "Eq(5.5) holds".into())?;
    let c57 = span_tangent_condition(&PolyMap::identity(1), &half, &[0.0], &[1.0], &c).map_err(e2s)?;
    ensure(c57.holds, || "Eq(5.7) fails".into())?;
    let v = check_metric2_regularity(&s, &[0.0], &[0.0], &[1.0], &c).map_err(e2s)?;
    ensure(v.status.is_positive(), || format!("metric 2-regularity verdict {:?}", v.status))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("Reg = 1 at three points, Eq(5.5) fails, Eq(5.7) holds, m2r {:?}", v.status))
}

// ---------------------------------------------------------------- 2, 3

fn parabola_f() -> PolyMap {
    PolyMap::parse(3, &["x1^2 + x2 + x3^2", "x1"]).unwrap()
}

fn parabola_set() -> ClosedSet {
    ClosedSet::Manifold { h: PolyMap::parse(3, &["0.5*x2 + 0.5*x3^2"]).unwrap() }
}

const CURVE_T: [f64; 3] = [1e-1, 1e-2, 1e-3];

fn parabola_constraint() -> Outcome {
    let start = Instant::now();
    let c = cfg();
    let s = StructuredMapping::smooth_plus(parabola_f(), StructuredMapping::Indicator { set: parabola_set(), out_dim: 2 }).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for t in CURVE_T {
        let u = [0.0, -t * t, t];
        let r = reg_value(&s, &u, &[0.0, 0.0], &c).map_err(e2s)?.value;
        worst = worst.max(r);
        ensure(r <= 1e-8, || format!("Reg at t = {t} is {r}"))?;
    }
    let f = SmoothMap::from(parabola_f());
    let w = [0.0, 0.0, 1.0];
    ensure(indicator_condition(&f, &parabola_set(), &[0.0; 3], &w, &c).map_err(e2s)?.holds, || "Eq(5.5) fails".into())?;
    ensure(!range_normal_separation(&f, &parabola_set(), &[0.0; 3], &c).map_err(e2s)?.holds, || "Eq(5.6) holds".into())?;
    let curve = |t: f64| (vec![0.0, -t * t, t], vec![0.0, 0.0]);
    let ev = curve_falsifier(&s, &[0.0; 3], &[0.0, 0.0], &curve, &CURVE_T, &c).map_err(e2s)?;
    ensure(ev.status == Some(VerdictStatus::NumericEvidenceAgainst), || format!("curve falsifier gave {:?}", ev.status))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("max Reg on curve {worst:.1e}, Eq(5.5) holds, Eq(5.6) fails, curve evidence against"))
}

fn lifted_parabola() -> Outcome {
    let c = cfg();
    let g = SmoothMap::from(PolyMap::parse(3, &["-x1", "-x2", "-x3", "x1^2 + x2 + x3^2", "x1"]).unwrap());
    let d0 = parabola_set().with_zero_right(2);
    let (u, y, w) = ([0.0; 3], [0.0; 5], [0.0, 0.0, 1.0]);
    ensure(constant_set_condition(&g, &d0, &u, &y, &w, &c).map_err(e2s)?.holds, || "Eq(5.3) fails".into())?;
    ensure(!constant_set_range_condition(&g, &d0, &u, &y, &w, &c).map_err(e2s)?.holds, || "Eq(5.8) holds".into())?;
    let ind = StructuredMapping::Indicator { set: parabola_set(), out_dim: 2 };
    for t in CURVE_T {
        let r = reg_chain(&parabola_f(), &ind, &[0.0, -t * t, t], &[0.0, 0.0], &c).map_err(e2s)?;
        ensure(r.sigma <= 1e-8 && r.cal_c <= 1e-8 && r.cal_c >= 0.0 && r.sigma >= r.cal_c - 1e-8, || {
            format!("chain at t = {t}: {r:?}")
        })?;
    }
    Ok("Eq(5.3) holds, Eq(5.8) fails, R_Σ and R_𝒞 vanish along the curve".into())
}

// ---------------------------------------------------------------- 4, 5

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
    let a = MatrixField::constant(nalgebra::DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), 1);
    LsvInstance::new(ClosedSet::Polyhedral(PolyhedralSet::universe(1)), a, gamma).unwrap()
}

fn normal_cone_family() -> LsvInstance {
    let eval: GraphFn = std::sync::Arc::new(|xi: &[f64]| {
        if xi[0] < -1e-12 {
            return Ok(None);
        }
        let p = if xi[0] <= 1e-12 { P::nonpos(2, &[1]) } else { P::new(2, vec![], vec![row(&[0.0, 1.0], 0.0)])? };
        Ok(Some(p.into()))
    });
    let gamma = GammaFamily::general(1, 1, true, true, None, eval);
    let a = MatrixField::constant(nalgebra::DMatrix::zeros(1, 1), 1);
    LsvInstance::new(ClosedSet::Polyhedral(P::nonneg(1, &[0]).into()), a, gamma).unwrap()
}

fn drifting() -> LsvInstance {
    let g: PolyhedralSet =
        P::new(4, vec![], vec![row(&[0.0, 0.0, 1.0, 0.0], 0.0), row(&[1.0, 0.0, 0.0, 1.0], 0.0)]).unwrap().into();
    let gamma = GammaFamily::jointly_polyhedral(1, 2, 1, g).unwrap();
    let a = MatrixField::from_poly(PolyMap::parse(1, &["x1", "x1^2"]).unwrap(), 1, 2).unwrap();
    LsvInstance::new(ClosedSet::Polyhedral(PolyhedralSet::universe(1)), a, gamma).unwrap()
}

fn drifting_family() -> Outcome {
    let c = cfg();
    let inst = drifting();
    let rep = inst.singularity_report(&[0.0], &c).map_err(e2s)?;
    let pts = rep.unit_points.clone().unwrap_or_default();
    let expected = [[-1.0, 0.0], [1.0, 0.0]];
    ensure(pts.len() == 2 && expected.iter().all(|e| pts.iter().any(|p| p.as_slice() == e)), || format!("𝒵₀ = {pts:?}"))?;
    let phi = |xi: &[f64]| Ok(inst.lsv_value(xi, &c)?.value);
    let est = subderivative_estimate(&phi, &[0.0], &[1.0], &SUBDERIVATIVE_SCHEDULE, None, &c).map_err(e2s)?;
    ensure(est.value.abs() <= 1e-6, || format!("subderivative estimate {}", est.value))?;
    let conic = lower_bound_conic(&inst, &[0.0], &[1.0], &c).map_err(e2s)?;
    ensure(conic.refused.as_deref() == Some("(iv')"), || format!("conic certifier: {:?}", conic.refused))?;
    Ok(format!("𝒵₀ = {pts:?}, dℓ(0)(1) ≈ {:.1e}, conic refuses (iv')", est.value))
}

fn cross_applicability() -> Outcome {
    let c = cfg();
    let (a, b) = (two_valued(), normal_cone_family());
    let calm_a = lower_bound_calm(&a, &[0.0], &[1.0], &c).map_err(e2s)?;
    let calm_b = lower_bound_calm(&b, &[0.0], &[1.0], &c).map_err(e2s)?;
    let conic_a = lower_bound_conic(&a, &[0.0], &[1.0], &c).map_err(e2s)?;
    let conic_b = lower_bound_conic(&b, &[0.0], &[1.0], &c).map_err(e2s)?;
    ensure(calm_a.refused.is_none() && calm_a.bound.is_some(), || format!("calm on two-valued: {calm_a:?}"))?;
    ensure(calm_b.refused.as_deref() == Some("(v)"), || format!("calm on normal-cone family: {:?}", calm_b.refused))?;
    ensure(conic_b.refused.is_none() && conic_b.bound.is_some(), || format!("conic on normal-cone family: {conic_b:?}"))?;
    ensure(conic_a.refused.as_deref() == Some("(v')"), || format!("conic on two-valued: {:?}", conic_a.refused))?;
    Ok("calm path: ok / refuses (v); conic path: refuses (v') / ok".into())
}

// ---------------------------------------------------------------- random generators

fn int_row(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2..=2) as f64).collect();
        if r.iter().any(|x| *x != 0.0) {
            return r;
        }
    }
}

/// A convex cone piece `{B x <= 0, E x = 0}`.
fn cone_piece(rng: &mut ChaCha8Rng, dim: usize) -> P {
    let ni = rng.gen_range(0..=2);
    let ne = if dim >= 2 { rng.gen_range(0..=1) } else { 0 };
    let ineq = (0..ni).map(|_| (int_row(rng, dim), 0.0)).collect();
    let eq = (0..ne).map(|_| (int_row(rng, dim), 0.0)).collect();
    P::new(dim, ineq, eq).unwrap()
}

fn cone_union(rng: &mut ChaCha8Rng, dim: usize) -> PolyhedralSet {
    let k = rng.gen_range(1..=3);
    PolyhedralSet::new(dim, (0..k).map(|_| cone_piece(rng, dim)).collect()).unwrap()
}

// ---------------------------------------------------------------- 6

/// Graph pieces `{(z, η) : η = A z, B z <= 0}`.
fn linear_piece(rng: &mut ChaCha8Rng, n: usize, m: usize, singular: bool) -> P {
    let dim = n + m;
    let mut eq = vec![];
    for i in 0..m {
        let mut r = vec![0.0; dim];
        if !singular {
            for v in r.iter_mut().take(n) {
                *v = -rng.gen_range(-3..=3) as f64;
            }
        }
        r[n + i] = 1.0;
        eq.push((r, 0.0));
    }
    let ni = if singular { 0 } else { rng.gen_range(0..=2) };
    let ineq = (0..ni)
        .map(|_| {
            let mut r = int_row(rng, n);
            r.extend(vec![0.0; m]);
            (r, 0.0)
        })
        .collect();
    P::new(dim, ineq, eq).unwrap()
}

fn reciprocal_identity() -> Outcome {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut regular, mut singular, mut worst) = (0, 0, 0.0f64);
    let mut tries = 0;
    while regular < 50 || singular < 10 {
        tries += 1;
        if tries > 2000 {
            return Err(format!("only {regular} regular and {singular} singular instances generated"));
        }
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let want_singular = regular >= 50 || (singular < 10 && rng.gen_bool(0.2));
        let mut pieces: Vec<P> = (0..rng.gen_range(1..=2)).map(|_| linear_piece(&mut rng, n, m, false)).collect();
        if want_singular {
            pieces.push(linear_piece(&mut rng, n, m, true));
        }
        let g = PolyhedralCone::new(PolyhedralSet::new(n + m, pieces).unwrap()).map_err(e2s)?;
        let k = HomogeneousPiecewiseMap::new(n, m, g).map_err(e2s)?;
        let l = lsv_of_map(&k, &c).map_err(e2s)?.value;
        let o = outer_norm(&k, &c).map_err(e2s)?;
        if want_singular {
            ensure(l == 0.0 && o == f64::INFINITY, || format!("singular instance: ℓ = {l}, outer norm {o}"))?;
            singular += 1;
        } else if l > 1e-3 && l.is_finite() {
            let gap = (o * l - 1.0).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-6, || format!("n = {n}, m = {m}: outer norm {o}, ℓ = {l}"))?;
            regular += 1;
        }
    }
    Ok(format!("50 regular maps, max |outer·ℓ − 1| = {worst:.1e}; 10 singular maps with infinite outer norm"))
}

// ---------------------------------------------------------------- 7

fn sphere_grid(m: usize) -> Vec<Vec<f64>> {
    match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let n = (2.0 * std::f64::consts::PI * 64.0).ceil() as usize;
            (0..n).map(|k| angle(k as f64 * 2.0 * std::f64::consts::PI / n as f64)).collect()
        }
        _ => unreachable!("graph dimension is at most 3"),
    }
}

fn angle(t: f64) -> Vec<f64> {
    vec![t.cos(), t.sin()]
}

/// `min_i d((z, 0), K_i)` by projection onto each piece.
fn kernel_gap(k: &HomogeneousPiecewiseMap, z: &[f64], c: &Config) -> f64 {
    let mut p = z.to_vec();
    p.extend(vec![0.0; k.val_dim]);
    k.graph
        .pieces()
        .iter()
        .filter_map(|piece| piece.project_point(&p, c))
        .map(|q| q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Grid search for a unit `z` with `0 ∈ D*S(z)`, zooming in around the best grid point.
fn brute_force_kernel(k: &HomogeneousPiecewiseMap, c: &Config) -> bool {
    let m = k.arg_dim;
    let grid = sphere_grid(m);
    let (mut best, mut arg) = (f64::INFINITY, 0usize);
    for (i, z) in grid.iter().enumerate() {
        let g = kernel_gap(k, z, c);
        if g < best {
            best = g;
            arg = i;
        }
    }
    if m == 1 || best <= 1e-9 {
        return best <= 1e-9;
    }
    let n = grid.len() as f64;
    let mut centre = arg as f64 * 2.0 * std::f64::consts::PI / n;
    let mut half = 2.0 * std::f64::consts::PI / n;
    for _ in 0..8 {
        let steps = 200;
        let mut local = (f64::INFINITY, centre);
        for s in 0..=steps {
            let t = centre - half + 2.0 * half * s as f64 / steps as f64;
            let g = kernel_gap(k, &angle(t), c);
            if g < local.0 {
                local = (g, t);
            }
        }
        best = local.0;
        centre = local.1;
        half *= 4.0 / steps as f64;
    }
    best <= 1e-7
}

fn coderivative_criterion_oracle() -> Outcome {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut yes, mut no) = (0, 0);
    for case in 0..100 {
        let (n, m) = [(1, 1), (1, 2), (2, 1)][case % 3];
        let s = StructuredMapping::GraphPolyhedral { in_dim: n, out_dim: m, graph: cone_union(&mut rng, n + m) };
        let (u, y) = (vec![0.0; n], vec![0.0; m]);
        let v = check_metric_regularity(&s, &u, &y, &c).map_err(e2s)?;
        let k = gendiff::coderivative(&s, &u, &y, &c).map_err(e2s)?;
        let oracle_regular = !brute_force_kernel(&k, &c);
        let checker_regular = match v.status {
            VerdictStatus::CertifiedYes => true,
            VerdictStatus::CertifiedNo => false,
            other => return Err(format!("case {case}: uncertified verdict {other:?}")),
        };
        ensure(oracle_regular == checker_regular, || format!("case {case}: checker {checker_regular}, grid {oracle_regular}, {s:?}"))?;
        if checker_regular {
            yes += 1;
        } else {
            no += 1;
        }
    }
    Ok(format!("100 mappings, 0 disagreements ({yes} regular, {no} not)"))
}

// ---------------------------------------------------------------- 8

fn chain_ordering() -> Outcome {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut squeezed = 0;
    for case in 0..100 {
        let (n, m) = [(1, 1), (1, 2), (2, 1), (2, 2)][case % 4];
        let a: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-2..=2) as f64).collect();
        let f = PolyMap::affine(&nalgebra::DMatrix::from_row_slice(m, n, &a), &vec![0.0; m]);
        let cmap = StructuredMapping::GraphPolyhedral { in_dim: n, out_dim: m, graph: cone_union(&mut rng, n + m) };
        let r = reg_chain(&f, &cmap, &vec![0.0; n], &vec![0.0; m], &c).map_err(e2s)?;
        let mid = r.cal_c.max(r.q);
        ensure(r.sigma >= mid - 1e-7 && mid >= r.cal_q - 1e-7, || format!("case {case}: {r:?}"))?;
        if r.cal_q <= 1e-9 {
            squeezed += 1;
            ensure([r.sigma, r.cal_c, r.q, r.cal_q].iter().all(|x| *x <= 1e-6), || format!("case {case}: no squeeze {r:?}"))?;
        }
    }
    Ok(format!("100 instances ordered, {squeezed} with R_𝒬 = 0 all squeezed"))
}

// ---------------------------------------------------------------- 9

fn square_numbers() -> Outcome {
    let c = cfg();
    let s = StructuredMapping::smooth_plus(PolyMap::parse(1, &["x1^2"]).unwrap(), origin_set(1)).map_err(e2s)?;
    for u in [-1.0, -0.25, 0.25, 1.0] {
        let r = reg_value(&s, &[u], &[u * u], &c).map_err(e2s)?.value;
        ensure((r - 2.0 * f64::abs(u)).abs() <= 1e-9, || format!("Reg at u = {u} is {r}"))?;
    }
    let mut moduli = vec![];
    for w in [1.0, -1.0] {
        let v = check_metric2_regularity(&s, &[0.0], &[0.0], &[w], &c).map_err(e2s)?;
        let m = v.modulus.ok_or_else(|| format!("no modulus for w = {w}: {v:?}"))?;
        ensure(v.status.is_positive() && (m - 0.5).abs() <= 1e-3, || format!("w = {w}: {:?} modulus {m}", v.status))?;
        let g = check_gfrerer(&s, &[0.0], &[0.0], &[w], &[0.0], &c).map_err(e2s)?;
        let gm = g.modulus.ok_or_else(|| format!("no Gfrerer modulus for w = {w}"))?;
        ensure(g.status.is_positive() && (gm - m).abs() <= 1e-3, || format!("w = {w}: Gfrerer modulus {gm} vs {m}"))?;
        moduli.push(m);
    }
    Ok(format!("Reg = 2|u| at four points, moduli {moduli:?}, Gfrerer agrees"))
}

// ---------------------------------------------------------------- 10

fn kkt_fixtures() -> Outcome {
    let c = cfg();
    let g = PolyMap::parse(1, &["-x1"]).unwrap();
    let strict = VariationalSystem::kkt(PolyMap::parse(1, &["x1 + 1"]).unwrap(), g.clone(), 1).map_err(e2s)?;
    let v = vs_metric_regularity(&strict, &[0.0], &[1.0], &[0.0], &c).map_err(e2s)?;
    ensure(v.status == VerdictStatus::CertifiedYes, || format!("strict instance: {:?}", v.status))?;

    let flat = VariationalSystem::kkt(PolyMap::zero(1, 1), g, 1).map_err(e2s)?;
    let v = vs_metric_regularity(&flat, &[0.0], &[0.0], &[0.0], &c).map_err(e2s)?;
    ensure(v.status == VerdictStatus::CertifiedNo, || format!("degenerate instance: {:?}", v.status))?;
    let z = v.witness.clone().ok_or("no witness")?;
    ensure(z.iter().any(|x| x.abs() > 1e-9), || "zero witness".into())?;
    // 0 ∈ A z + ∇g χ with χ ∈ D*N(ζ̄|λ̄)(ℳᵀ z); here A = 0, ∇g = ℳ = −1
    let n = StructuredMapping::NormalConeMap { set: P::nonpos(1, &[0]) };
    let dn = gendiff::coderivative(&n, &[0.0], &[0.0], &c).map_err(e2s)?;
    let chis = dn.value_at(&[-z[0]]).map_err(e2s)?;
    let solvable = chis.pieces().iter().any(|p| !p.with_rows(vec![], vec![row(&[-1.0], 0.0)]).is_empty(&c));
    ensure(solvable, || format!("witness {z:?} does not satisfy the inclusion"))?;

    for (name, vs, lam) in [("strict", &strict, 1.0), ("degenerate", &flat, 0.0)] {
        ensure(lemma_t_regular(vs, &[lam], &[0.0], &c).map_err(e2s)?, || format!("T not regular on {name}"))?;
    }
    Ok(format!("strict: CertifiedYes; degenerate: CertifiedNo with witness {z:?} verified; T regular on both"))
}

// ---------------------------------------------------------------- 11

fn rows_of(p: &P) -> (Vec<(Vec<f64>, f64)>, Vec<(Vec<f64>, f64)>) {
    (p.inequalities().to_vec(), p.equalities().to_vec())
}

/// `gph(Ax + C)` from `gph C`: `(x, y) ∈ gph C` becomes `(x, Ax + y)`.
fn sum_graph(a: &nalgebra::DMatrix<f64>, gc: &PolyhedralSet, n: usize, m: usize) -> PolyhedralSet {
    let sub = |(r, b): &(Vec<f64>, f64)| -> (Vec<f64>, f64) {
        // r_x x + r_y (η − A x)
        let mut out = r.clone();
        for j in 0..n {
            out[j] -= (0..m).map(|i| r[n + i] * a[(i, j)]).sum::<f64>();
        }
        (out, *b)
    };
    let pieces = gc
        .pieces()
        .iter()
        .map(|p| {
            let (ineq, eq) = rows_of(p);
            P::new(n + m, ineq.iter().map(sub).collect(), eq.iter().map(sub).collect()).unwrap()
        })
        .collect();
    PolyhedralSet::new(n + m, pieces).unwrap()
}

/// `gph(R × T)` in `(x, u, y_R, y_T)` order.
fn product_graph(gr: &PolyhedralSet, (n1, m1): (usize, usize), gt: &PolyhedralSet, (n2, m2): (usize, usize)) -> PolyhedralSet {
    let dim = n1 + n2 + m1 + m2;
    let r_coords: Vec<usize> = (0..n1).chain(n1 + n2..n1 + n2 + m1).collect();
    let t_coords: Vec<usize> = (n1..n1 + n2).chain(n1 + n2 + m1..dim).collect();
    let lift = |(r, b): &(Vec<f64>, f64), coords: &[usize]| {
        let mut out = vec![0.0; dim];
        for (k, &j) in coords.iter().enumerate() {
            out[j] = r[k];
        }
        (out, *b)
    };
    let mut pieces = vec![];
    for p in gr.pieces() {
        for q in gt.pieces() {
            let (pi, pe) = rows_of(p);
            let (qi, qe) = rows_of(q);
            let ineq = pi.iter().map(|r| lift(r, &r_coords)).chain(qi.iter().map(|r| lift(r, &t_coords))).collect();
            let eq = pe.iter().map(|r| lift(r, &r_coords)).chain(qe.iter().map(|r| lift(r, &t_coords))).collect();
            pieces.push(P::new(dim, ineq, eq).unwrap());
        }
    }
    PolyhedralSet::new(dim, pieces).unwrap()
}

fn graph_route(s_graph: PolyhedralSet, n: usize, m: usize, c: &Config) -> Result<HomogeneousPiecewiseMap, String> {
    let g = StructuredMapping::GraphPolyhedral { in_dim: n, out_dim: m, graph: s_graph };
    gendiff::coderivative_graph_route(&g, &vec![0.0; n], &vec![0.0; m], c).map_err(e2s)
}

fn calculus_rules() -> Outcome {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut count = [0usize; 3];
    for case in 0..30 {
        let (rule, s, graph, n, m) = match case % 3 {
            0 => {
                let (n, m) = [(1, 1), (2, 1), (1, 2)][rng.gen_range(0..3)];
                let a = nalgebra::DMatrix::from_fn(m, n, |_, _| rng.gen_range(-2..=2) as f64);
                let gc = cone_union(&mut rng, n + m);
                let inner = StructuredMapping::GraphPolyhedral { in_dim: n, out_dim: m, graph: gc.clone() };
                let s = StructuredMapping::smooth_plus(PolyMap::affine(&a, &vec![0.0; m]), inner).map_err(e2s)?;
                ("sum", s, sum_graph(&a, &gc, n, m), n, m)
            }
            1 => {
                let gr = cone_union(&mut rng, 2);
                let gt = cone_union(&mut rng, 2);
                let r = StructuredMapping::GraphPolyhedral { in_dim: 1, out_dim: 1, graph: gr.clone() };
                let t = StructuredMapping::GraphPolyhedral { in_dim: 1, out_dim: 1, graph: gt.clone() };
                ("product", StructuredMapping::product(r, t), product_graph(&gr, (1, 1), &gt, (1, 1)), 2, 2)
            }
            _ => {
                let n = rng.gen_range(1..=2);
                let m = rng.gen_range(1..=2);
                let omega = cone_union(&mut rng, n);
                let graph = omega.product(&P::origin(m).into());
                ("indicator", StructuredMapping::indicator_polyhedral(omega, m), graph, n, m)
            }
        };
        let rules = gendiff::coderivative(&s, &vec![0.0; n], &vec![0.0; m], &c).map_err(e2s)?;
        let direct = graph_route(graph, n, m, &c)?;
        ensure(rules.graph.set_eq(&direct.graph, &c), || format!("case {case} ({rule}) differs: {s:?}"))?;
        count[case % 3] += 1;
    }
    Ok(format!("{} sum, {} product, {} indicator fixtures agree", count[0], count[1], count[2]))
}

// ---------------------------------------------------------------- 12

fn random_constraint_system(rng: &mut ChaCha8Rng) -> ConstraintSystem {
    let (k, l, p) = (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=2));
    let vars = k + l;
    let comps: Vec<String> = (0..p)
        .map(|_| {
            let mut out = String::from("0");
            for v in 1..=vars {
                for (coef, pow) in [(rng.gen_range(-2..=2), ""), (rng.gen_range(-1..=1), "^2")] {
                    if coef != 0 {
                        let sign = if coef < 0 { '-' } else { '+' };
                        out.push_str(&format!(" {sign} {}*x{v}{pow}", i32::abs(coef)));
                    }
                }
            }
            out
        })
        .collect();
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    let phi = PolyMap::parse(vars, &refs).unwrap();
    let omega = if rng.gen_bool(0.5) { PolyhedralSet::universe(k) } else { cone_union(rng, k) };
    let q = rng.gen_range(1..=2);
    let t = StructuredMapping::GraphPolyhedral { in_dim: l, out_dim: q, graph: cone_union(rng, l + q) };
    ConstraintSystem::new(phi, omega, t).unwrap()
}

fn equivalence_invariants() -> Outcome {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut n71, mut n72, mut refused) = (0, 0, 0);
    let mut tries = 0;
    while n71 < 30 || n72 < 30 {
        tries += 1;
        if tries > 1000 {
            return Err(format!("only {n71} / {n72} fixtures evaluated"));
        }
        let cs = random_constraint_system(&mut rng);
        let (x, s) = (vec![0.0; cs.k()], vec![0.0; cs.l()]);
        match cs_metric_regularity(&cs, &x, &s, &c) {
            Ok(_) => n71 += 1,
            Err(Error::Inconsistency(m)) => return Err(format!("(b)⇔(c) violated: {m}")),
            Err(e) => return Err(format!("unexpected error {e}")),
        }
        let w: Vec<f64> = (0..cs.k() + cs.l()).map(|_| rng.gen_range(-2..=2) as f64).collect();
        if w.iter().all(|v| *v == 0.0) {
            continue;
        }
        match cs_metric2_regularity_polyhedral(&cs, &x, &s, &w, &c) {
            Ok(_) => n72 += 1,
            Err(Error::Inconsistency(m)) => return Err(format!("(a)⇔(b) violated: {m}")),
            Err(Error::DirectionNotInDomain) => refused += 1,
            Err(e) => return Err(format!("unexpected error {e}")),
        }
    }
    Ok(format!("{n71} systems for the first-order pair, {n72} for the second-order pair ({refused} directions outside the domain skipped)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("half-line indicator", halfline_indicator),
        ("parabola constraint", parabola_constraint),
        ("lifted parabola and Reg-chain", lifted_parabola),
        ("drifting family", drifting_family),
        ("certifier cross-applicability", cross_applicability),
        ("reciprocal identity", reciprocal_identity),
        ("coderivative criterion oracle", coderivative_criterion_oracle),
        ("Reg-chain ordering", chain_ordering),
        ("u^2 desk numbers", square_numbers),
        ("KKT fixtures", kkt_fixtures),
        ("calculus rules vs graph route", calculus_rules),
        ("equivalence invariants", equivalence_invariants),
    ];
    let mut failed = 0;
    let mut invariant_violated = false;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                invariant_violated |= i == 11;
                println!("criterion {:>2} FAIL  {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if invariant_violated {
        std::process::exit(2);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
