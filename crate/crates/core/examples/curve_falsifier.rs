//! Reg along a curve into the base point: numeric evidence against metric regularity.

use lsvreg::lsv::reg_value;
use lsvreg::regularity::curve_falsifier;
use lsvreg::setmaps::{ClosedSet, StructuredMapping};
use lsvreg::smoothmaps::PolyMap;
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    let f = PolyMap::parse(3, &["x1^2 + x2 + x3^2", "x1"])?;
    let set = ClosedSet::Manifold { h: PolyMap::parse(3, &["0.5*x2 + 0.5*x3^2"])? };
    let s = StructuredMapping::smooth_plus(f, StructuredMapping::Indicator { set, out_dim: 2 })?;

    let ts = [1e-1, 1e-2, 1e-3];
    for t in ts {
        let r = reg_value(&s, &[0.0, -t * t, t], &[0.0, 0.0], &cfg)?;
        println!("t = {t:.0e}: Reg = {:.3e}", r.value);
    }
    let curve = |t: f64| (vec![0.0, -t * t, t], vec![0.0, 0.0]);
    let v = curve_falsifier(&s, &[0.0; 3], &[0.0, 0.0], &curve, &ts, &cfg)?;
    println!("verdict: {:?}", v.status);
    Ok(())
}
