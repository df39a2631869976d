//! The four Reg values of F + C and its lifted reformulations, on an affine F with a cone C.

use lsvreg::polyhedra::{ConvexPolyhedron as P, PolyhedralSet};
use lsvreg::regularity::reg_chain;
use lsvreg::setmaps::StructuredMapping;
use lsvreg::smoothmaps::PolyMap;
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    // gph C = {(u, y) : y >= |u|}
    let graph = PolyhedralSet::from_piece(P::new(2, vec![(vec![1.0, -1.0], 0.0), (vec![-1.0, -1.0], 0.0)], vec![])?);
    let c = StructuredMapping::GraphPolyhedral { in_dim: 1, out_dim: 1, graph };
    for f in ["x1", "2*x1", "0"] {
        let r = reg_chain(&PolyMap::parse(1, &[f])?, &c, &[0.0], &[0.0], &cfg)?;
        println!(
            "F = {f:<4} R_Σ {:.4}  R_𝒞 {:.4}  R_Q {:.4}  R_𝒬 {:.4}  ordered {}",
            r.sigma, r.cal_c, r.q, r.cal_q, r.ordered
        );
    }
    Ok(())
}
