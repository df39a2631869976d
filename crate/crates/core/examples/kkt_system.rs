//! KKT systems of min f s.t. g <= 0: metric regularity, the second-order sweep and the transition map.

use lsvreg::smoothmaps::PolyMap;
use lsvreg::systems::{lemma_t_regular, vs_metric2_regularity, vs_metric_regularity, VariationalSystem};
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    let g = PolyMap::parse(1, &["-x1"])?;
    let cases = [("strict", "x1 + 1", 1.0), ("degenerate", "0", 0.0)];
    for (name, f, lambda) in cases {
        let vs = VariationalSystem::kkt(PolyMap::parse(1, &[f])?, g.clone(), 1)?;
        let v = vs_metric_regularity(&vs, &[0.0], &[lambda], &[0.0], &cfg)?;
        println!("{name}: metric regularity {:?}, witness {:?}", v.status, v.witness);
        let v2 = vs_metric2_regularity(&vs, &[0.0], &[lambda], &[0.0], &[1.0], &[0.0], None, &cfg)?;
        println!("{name}: 2-regularity along x = 1: {:?}", v2.status);
        println!("{name}: transition map regular: {}", lemma_t_regular(&vs, &[lambda], &[0.0], &cfg)?);
    }
    Ok(())
}
