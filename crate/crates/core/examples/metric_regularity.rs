//! Reg values and the coderivative criterion on F(u) + C₀ for a few smooth parts.

use lsvreg::regularity::check_metric_regularity;
use lsvreg::lsv::reg_value;
use lsvreg::polyhedra::ConvexPolyhedron as P;
use lsvreg::setmaps::StructuredMapping;
use lsvreg::smoothmaps::PolyMap;
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    for f in ["2*x1", "x1^2", "x1^3 + x1"] {
        let s = StructuredMapping::smooth_plus(PolyMap::parse(1, &[f])?, StructuredMapping::constant_polyhedral(1, P::origin(1).into()))?;
        let v = check_metric_regularity(&s, &[0.0], &[0.0], &cfg)?;
        let r = reg_value(&s, &[0.5], &PolyMap::parse(1, &[f])?.evaluate(&[0.5])?, &cfg)?;
        println!("F = {f:<10} at 0: {:?} (modulus {:?}); Reg at 0.5 = {:.4}", v.status, v.modulus, r.value);
    }
    Ok(())
}
