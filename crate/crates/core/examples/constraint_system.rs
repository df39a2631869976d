//! Parametric constraint systems Φ(x, σ) ∈ Ω × T(σ).

use lsvreg::polyhedra::{ConvexPolyhedron as P, PolyhedralSet};
use lsvreg::setmaps::StructuredMapping;
use lsvreg::smoothmaps::PolyMap;
use lsvreg::systems::{cs_metric2_regularity_polyhedral, cs_metric2_regularity_unconstrained, cs_metric_regularity, ConstraintSystem};
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    let t = StructuredMapping::smooth_plus(PolyMap::identity(1), StructuredMapping::constant_polyhedral(1, P::origin(1).into()))?;
    let cs = ConstraintSystem::new(PolyMap::parse(2, &["x1^2 + x2"])?, PolyhedralSet::universe(1), t)?;

    let v = cs_metric_regularity(&cs, &[0.0], &[0.0], &cfg)?;
    println!("metric regularity: {:?}", v.status);
    let v = cs_metric2_regularity_polyhedral(&cs, &[0.0], &[0.0], &[1.0, 0.0], &cfg)?;
    println!("2-regularity (polyhedral route): {:?}", v.status);
    match cs_metric2_regularity_unconstrained(&cs, &[0.0], &[0.0], &[1.0, 0.0], &cfg) {
        Ok(v) => println!("2-regularity (unconstrained route): {:?}", v.status),
        Err(e) => println!("unconstrained route refused: {e}"),
    }
    Ok(())
}
