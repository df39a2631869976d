//! LSV values, singularity reports and the two lower-bound certifiers on a
//! jointly polyhedral family.

use lsvreg::lsv::{combined_lower_bound, lower_bound_calm, lower_bound_conic, GammaFamily, LsvInstance, MatrixField};
use lsvreg::polyhedra::{ConvexPolyhedron as P, PolyhedralSet};
use lsvreg::setmaps::ClosedSet;
use lsvreg::smoothmaps::PolyMap;
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    // graph coordinates (ξ, z, η): Γ(ξ) = {(z, η) : z₂ = 0, η = -ξ}, A(ξ) = (ξ, ξ²)
    let graph: PolyhedralSet = P::new(4, vec![], vec![(vec![0.0, 0.0, 1.0, 0.0], 0.0), (vec![1.0, 0.0, 0.0, 1.0], 0.0)])?.into();
    let gamma = GammaFamily::jointly_polyhedral(1, 2, 1, graph)?;
    let a = MatrixField::from_poly(PolyMap::parse(1, &["x1", "x1^2"])?, 1, 2)?;
    let inst = LsvInstance::new(ClosedSet::Polyhedral(PolyhedralSet::universe(1)), a, gamma)?;

    for xi in [0.0, 0.1, 0.5] {
        println!("ℓ({xi}) = {:.6}", inst.lsv_value(&[xi], &cfg)?.value);
    }
    let rep = inst.singularity_report(&[0.0], &cfg)?;
    println!("singular at 0: {}, unit zeros {:?}", rep.is_singular, rep.unit_points);

    for (name, out) in [
        ("calm", lower_bound_calm(&inst, &[0.0], &[1.0], &cfg)?),
        ("conic", lower_bound_conic(&inst, &[0.0], &[1.0], &cfg)?),
    ] {
        match &out.refused {
            Some(c) => println!("{name:>8}: refused, condition {c} fails"),
            None => println!("{name:>8}: bound {:?} (c = {:?})", out.bound, out.c),
        }
    }
    println!("combined: {:?}", combined_lower_bound(&inst, &[0.0], &[1.0], &cfg)?.bound);
    Ok(())
}
