//! Directional regularity of u ↦ u² + {0}: metric 2-regularity against Gfrerer regularity.

use lsvreg::regularity::{check_metric2_regularity, m2r_equiv_gfrerer};
use lsvreg::polyhedra::ConvexPolyhedron as P;
use lsvreg::setmaps::StructuredMapping;
use lsvreg::smoothmaps::PolyMap;
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    let s = StructuredMapping::smooth_plus(PolyMap::parse(1, &["x1^2"])?, StructuredMapping::constant_polyhedral(1, P::origin(1).into()))?;
    for w in [1.0, -1.0] {
        let v = check_metric2_regularity(&s, &[0.0], &[0.0], &[w], &cfg)?;
        println!("w = {w:+}: {:?}, modulus {:?}", v.status, v.modulus);
        for t in &v.trace {
            println!("    {t:?}");
        }
        let eq = m2r_equiv_gfrerer(&s, &[0.0], &[0.0], &[w], &cfg)?;
        println!("    Gfrerer over {} directions, consistent: {}", eq.gfrerer.len(), eq.consistent);
    }
    Ok(())
}
