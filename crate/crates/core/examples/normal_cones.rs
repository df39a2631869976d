//! Limiting normal cones of a nonconvex polyhedral set and the coderivative of its normal-cone map.

use lsvreg::gendiff;
use lsvreg::polyhedra::{limiting_normal_cone, ConvexPolyhedron as P, PolyhedralSet};
use lsvreg::setmaps::StructuredMapping;
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let cfg = Config::default();
    // the complementarity angle {x >= 0, y = 0} ∪ {x = 0, y >= 0}
    let x_axis = P::nonneg(2, &[0]).with_rows(vec![], vec![(vec![0.0, 1.0], 0.0)]);
    let y_axis = P::nonneg(2, &[1]).with_rows(vec![], vec![(vec![1.0, 0.0], 0.0)]);
    let angle = PolyhedralSet::new(2, vec![x_axis, y_axis])?;

    for point in [[0.0, 0.0], [1.0, 0.0]] {
        let n = limiting_normal_cone(&angle, &point, &cfg)?;
        println!("N({point:?}) has {} pieces:", n.pieces().len());
        for p in n.pieces() {
            println!("  ineq {:?}  eq {:?}", p.inequalities(), p.equalities());
        }
    }

    // D*N_{ℝ₋}(0|0): the usual complementarity coderivative
    let nc = StructuredMapping::NormalConeMap { set: P::nonpos(1, &[0]) };
    let k = gendiff::coderivative(&nc, &[0.0], &[0.0], &cfg)?;
    for z in [-1.0, 0.0, 1.0] {
        let v = k.value_at(&[z])?;
        println!("D*N(0|0)({z}) = {} piece(s), contains 0: {}", v.pieces().len(), v.contains(&[0.0], cfg.tol_mem));
    }
    Ok(())
}
