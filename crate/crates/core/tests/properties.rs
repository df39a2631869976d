use approx::assert_relative_eq;
use lsvreg::polyhedra::{ConvexPolyhedron as P, PolyhedralSet};
use lsvreg::regularity::{check_metric2_regularity, classic_kernel_condition, classic_rank_condition, reg_chain};
use lsvreg::setmaps::StructuredMapping;
use lsvreg::smoothmaps::PolyMap;
use lsvreg::Config;
use proptest::prelude::*;

fn coef() -> impl Strategy<Value = f64> {
    (-3i32..=3).prop_map(f64::from)
}

/// Quadratic maps `ℝ² → ℝᵐ` written out as strings.
fn quadratic(m: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::collection::vec(coef(), 6), m).prop_map(|rows| {
        rows.iter()
            .map(|c| {
                let monos = ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"];
                let mut s = String::from("0");
                for (a, mono) in c.iter().zip(monos) {
                    if *a != 0.0 {
                        s.push_str(&format!(" {} {}*{mono}", if *a < 0.0 { '-' } else { '+' }, a.abs()));
                    }
                }
                s
            })
            .collect()
    })
}

fn parse(comps: &[String]) -> PolyMap {
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    PolyMap::parse(2, &refs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polymap_prints_and_parses_back(comps in quadratic(2), x in prop::collection::vec(-2.0..2.0f64, 2)) {
        let f = parse(&comps);
        let printed = f.to_strings();
        let g = PolyMap::parse(2, &printed.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        for (a, b) in f.evaluate(&x).unwrap().iter().zip(g.evaluate(&x).unwrap()) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn classic_conditions_agree(comps in quadratic(2), w in prop::collection::vec(coef(), 2)) {
        prop_assume!(w.iter().any(|v| *v != 0.0));
        let f = parse(&comps);
        let k = classic_kernel_condition(&f, &[0.0, 0.0], &w).unwrap();
        let r = classic_rank_condition(&f, &[0.0, 0.0], &w).unwrap();
        prop_assert_eq!(k.holds, r.holds);
    }

    #[test]
    fn m2r_verdict_ignores_direction_length(a in coef(), b in coef(), w in prop_oneof![Just(1.0), Just(-1.0)], scale in 0.1..10.0f64) {
        let cfg = Config::default();
        let f = PolyMap::parse(1, &[format!("{a}*x1 + {b}*x1^2").replace("+ -", "- ").as_str()]).unwrap();
        let s = StructuredMapping::smooth_plus(f, StructuredMapping::constant_polyhedral(1, P::origin(1).into())).unwrap();
        let v1 = check_metric2_regularity(&s, &[0.0], &[0.0], &[w], &cfg);
        let v2 = check_metric2_regularity(&s, &[0.0], &[0.0], &[w * scale], &cfg);
        match (v1, v2) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.status, y.status),
            (Err(x), Err(y)) => prop_assert_eq!(x.to_string(), y.to_string()),
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn reg_chain_is_ordered(a in coef(), b in coef(), lo in prop::option::of(coef())) {
        let cfg = Config::default();
        let f = PolyMap::parse(1, &[format!("{a}*x1 + {b}*x1^2").replace("+ -", "- ").as_str()]).unwrap();
        // gph C = {(u, y) : y = 0, lo·u <= 0}
        let ineq = lo.map(|l| vec![(vec![l, 0.0], 0.0)]).unwrap_or_default();
        let g = PolyhedralSet::from_piece(P::new(2, ineq, vec![(vec![0.0, 1.0], 0.0)]).unwrap());
        let c = StructuredMapping::GraphPolyhedral { in_dim: 1, out_dim: 1, graph: g };
        let r = reg_chain(&f, &c, &[0.0], &[0.0], &cfg).unwrap();
        prop_assert!(r.ordered, "{:?}", r);
        prop_assert!(r.cal_q >= 0.0);
        if r.cal_q <= 1e-9 {
            prop_assert!(r.squeeze, "{:?}", r);
        }
    }
}
