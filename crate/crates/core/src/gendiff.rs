//! Graphical derivatives and coderivatives of structured mappings.
//!
//! The structural rules (sum with a smooth map, products, indicators,
//! constant maps) are authoritative. The graph routes take the tangent or
//! limiting normal cone of a materialized polyhedral graph and serve as
//! oracles for the rules.

use crate::error::{check_dim, Error, Result};
use crate::linalg::Mat;
use crate::polyhedra::{limiting_normal_cone, PolyhedralCone};
use crate::setmaps::{permute_set, HomogeneousPiecewiseMap, StructuredMapping};
use crate::Config;

fn check_basepoint(s: &StructuredMapping, x: &[f64], y: &[f64], cfg: &Config) -> Result<()> {
    check_dim("basepoint argument", s.in_dim(), x.len())?;
    check_dim("basepoint value", s.out_dim(), y.len())?;
    if !s.contains_graph(x, y, cfg) {
        return Err(Error::BasepointOffGraph);
    }
    Ok(())
}

/// `(z, v) ↦ (v, -z)` from coderivative coordinates to graph-normal coordinates.
fn flip(n: usize, m: usize) -> Mat {
    let mut l = Mat::zeros(n + m, m + n);
    for i in 0..n {
        l[(i, m + i)] = 1.0;
    }
    for j in 0..m {
        l[(n + j, j)] = -1.0;
    }
    l
}

/// `(a, b) ↦ (a, b - M a)`; the preimage under it is the image under `(a, b) ↦ (a, b + M a)`.
fn shear(m: &Mat) -> Mat {
    let (r, c) = m.shape();
    let mut s = Mat::identity(c + r, c + r);
    for i in 0..r {
        for k in 0..c {
            s[(c + i, k)] = -m[(i, k)];
        }
    }
    s
}

/// Product of two homogeneous maps, arguments and values interleaved as `(a₁, a₂, v₁, v₂)`.
fn product_map(a: &HomogeneousPiecewiseMap, b: &HomogeneousPiecewiseMap) -> Result<HomogeneousPiecewiseMap> {
    let (n1, m1, n2, m2) = (a.arg_dim, a.val_dim, b.arg_dim, b.val_dim);
    let coords: Vec<usize> = (0..n1)
        .chain(n1 + n2..n1 + n2 + m1)
        .chain(n1..n1 + n2)
        .chain(n1 + n2 + m1..n1 + n2 + m1 + m2)
        .collect();
    let prod = a.graph.product(&b.graph);
    let g = PolyhedralCone::new(permute_set(prod.as_set(), &coords))?;
    HomogeneousPiecewiseMap::new(n1 + n2, m1 + m2, g)
}

/// `D*S(x̄|ȳ)` by the structural rules, graph in `(z, v) ∈ ℝ^{out+in}`.
pub fn coderivative(s: &StructuredMapping, x: &[f64], y: &[f64], cfg: &Config) -> Result<HomogeneousPiecewiseMap> {
    check_basepoint(s, x, y, cfg)?;
    coderivative_unchecked(s, x, y, cfg)
}

fn coderivative_unchecked(
    s: &StructuredMapping,
    x: &[f64],
    y: &[f64],
    cfg: &Config,
) -> Result<HomogeneousPiecewiseMap> {
    let (n, m) = (s.in_dim(), s.out_dim());
    match s {
        StructuredMapping::Indicator { set, out_dim } => {
            let nc = set.normal_cone(x, cfg)?;
            HomogeneousPiecewiseMap::new(*out_dim, n, PolyhedralCone::full(*out_dim).product(&nc))
        }
        StructuredMapping::ConstantSet { in_dim, set } => {
            let nc = set.normal_cone(y, cfg)?;
            HomogeneousPiecewiseMap::new(m, *in_dim, nc.negated().product(&PolyhedralCone::zero(*in_dim)))
        }
        StructuredMapping::Product(r, t) => {
            let (n1, m1) = (r.in_dim(), r.out_dim());
            let a = coderivative_unchecked(r, &x[..n1], &y[..m1], cfg)?;
            let b = coderivative_unchecked(t, &x[n1..], &y[m1..], cfg)?;
            product_map(&a, &b)
        }
        StructuredMapping::SmoothPlus { f, c } => {
            let fx = f.evaluate(x)?;
            let yc: Vec<f64> = y.iter().zip(&fx).map(|(a, b)| a - b).collect();
            let inner = coderivative_unchecked(c, x, &yc, cfg)?;
            // v = ∇F z + v_C
            let g = inner.graph.linear_preimage(&shear(&f.jacobian(x)?))?;
            HomogeneousPiecewiseMap::new(m, n, g)
        }
        StructuredMapping::GraphPolyhedral { .. } | StructuredMapping::NormalConeMap { .. } => {
            coderivative_graph_route(s, x, y, cfg)
        }
    }
}

/// `D*S(x̄|ȳ)` from the limiting normal cone of the materialized graph.
pub fn coderivative_graph_route(
    s: &StructuredMapping,
    x: &[f64],
    y: &[f64],
    cfg: &Config,
) -> Result<HomogeneousPiecewiseMap> {
    check_basepoint(s, x, y, cfg)?;
    let (n, m) = (s.in_dim(), s.out_dim());
    let g = s.graph(cfg)?;
    let nc = limiting_normal_cone(&g, &[x, y].concat(), cfg)?;
    HomogeneousPiecewiseMap::new(m, n, nc.linear_preimage(&flip(n, m))?.deduplicated(cfg))
}

/// `DS(x̄|ȳ)` by the structural rules, graph in `(w, η) ∈ ℝ^{in+out}`.
pub fn graphical_derivative(
    s: &StructuredMapping,
    x: &[f64],
    y: &[f64],
    cfg: &Config,
) -> Result<HomogeneousPiecewiseMap> {
    check_basepoint(s, x, y, cfg)?;
    graphical_unchecked(s, x, y, cfg)
}

fn graphical_unchecked(
    s: &StructuredMapping,
    x: &[f64],
    y: &[f64],
    cfg: &Config,
) -> Result<HomogeneousPiecewiseMap> {
    let (n, m) = (s.in_dim(), s.out_dim());
    match s {
        StructuredMapping::Indicator { set, out_dim } => {
            let t = set.tangent_cone(x, cfg)?;
            HomogeneousPiecewiseMap::new(n, *out_dim, t.product(&PolyhedralCone::zero(*out_dim)))
        }
        StructuredMapping::ConstantSet { in_dim, set } => {
            let t = set.tangent_cone(y, cfg)?;
            HomogeneousPiecewiseMap::new(*in_dim, m, PolyhedralCone::full(*in_dim).product(&t))
        }
        StructuredMapping::Product(r, t) => {
            let (n1, m1) = (r.in_dim(), r.out_dim());
            let a = graphical_unchecked(r, &x[..n1], &y[..m1], cfg)?;
            let b = graphical_unchecked(t, &x[n1..], &y[m1..], cfg)?;
            product_map(&a, &b)
        }
        StructuredMapping::SmoothPlus { f, c } => {
            let fx = f.evaluate(x)?;
            let yc: Vec<f64> = y.iter().zip(&fx).map(|(a, b)| a - b).collect();
            let inner = graphical_unchecked(c, x, &yc, cfg)?;
            // η = F′(x̄) w + η_C
            let g = inner.graph.linear_preimage(&shear(&f.jacobian(x)?.transpose()))?;
            HomogeneousPiecewiseMap::new(n, m, g)
        }
        StructuredMapping::GraphPolyhedral { .. } | StructuredMapping::NormalConeMap { .. } => {
            graphical_derivative_graph_route(s, x, y, cfg)
        }
    }
}

/// `DS(x̄|ȳ)` from the tangent cone of the materialized graph.
pub fn graphical_derivative_graph_route(
    s: &StructuredMapping,
    x: &[f64],
    y: &[f64],
    cfg: &Config,
) -> Result<HomogeneousPiecewiseMap> {
    check_basepoint(s, x, y, cfg)?;
    let g = s.graph(cfg)?;
    HomogeneousPiecewiseMap::new(s.in_dim(), s.out_dim(), g.tangent_cone(&[x, y].concat(), cfg)?)
}

/// `{z : 0 ∈ K(z)}`.
pub fn coderivative_kernel(k: &HomogeneousPiecewiseMap, cfg: &Config) -> Result<PolyhedralCone> {
    k.kernel(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::{ConvexPolyhedron as P, PolyhedralSet};
    use crate::smoothmaps::PolyMap;

    fn cfg() -> Config {
        Config::default()
    }

    fn halfline() -> PolyhedralSet {
        P::nonneg(1, &[0]).into()
    }

    fn nonpos_line() -> PolyhedralCone {
        PolyhedralCone::from_piece(P::nonpos(1, &[0])).unwrap()
    }

    #[test]
    fn indicator_coderivative_is_normal_cone() {
        let s = StructuredMapping::indicator_polyhedral(halfline(), 1);
        let c = cfg();
        let k = coderivative(&s, &[0.0], &[0.0], &c).unwrap();
        for z in [-2.0, 0.0, 5.0] {
            let v = PolyhedralCone::new(k.value_at(&[z]).unwrap()).unwrap();
            assert!(v.set_eq(&nonpos_line(), &c));
        }
        assert!(!coderivative_kernel(&k, &c).unwrap().is_trivial(&c));
        let oracle = coderivative_graph_route(&s, &[0.0], &[0.0], &c).unwrap();
        assert!(k.graph.set_eq(&oracle.graph, &c));
    }

    #[test]
    fn indicator_graphical_derivative() {
        let s = StructuredMapping::indicator_polyhedral(halfline(), 1);
        let c = cfg();
        let d = graphical_derivative(&s, &[0.0], &[0.0], &c).unwrap();
        assert!(d.contains(&[1.0], &[0.0], &c));
        assert!(d.value_at(&[-1.0]).unwrap().is_empty(&c));
    }

    #[test]
    fn parabola_derivatives() {
        // S(u) = u² written as u² + {0}
        let f = PolyMap::parse(1, &["x1^2"]).unwrap();
        let zero: PolyhedralSet = P::origin(1).into();
        let s = StructuredMapping::smooth_plus(f, StructuredMapping::constant_polyhedral(1, zero)).unwrap();
        let c = cfg();
        let d = graphical_derivative(&s, &[0.0], &[0.0], &c).unwrap();
        for w in [-1.0, 2.0] {
            assert!(d.contains(&[w], &[0.0], &c));
            assert!(!d.contains(&[w], &[1.0], &c));
        }
        let u = 1.5;
        let k = coderivative(&s, &[u], &[u * u], &c).unwrap();
        for z in [-1.0, 0.5, 3.0] {
            assert!(k.contains(&[z], &[2.0 * u * z], &c));
            assert!(!k.contains(&[z], &[2.0 * u * z + 0.1], &c));
        }
    }

    #[test]
    fn normal_cone_map_coderivative() {
        let s = StructuredMapping::NormalConeMap { set: P::nonneg(1, &[0]) };
        let c = cfg();
        let k = coderivative(&s, &[0.0], &[0.0], &c).unwrap();
        // D*N(0|0)(1) = {0}, D*N(0|0)(-1) = ℝ₋
        assert!(k.contains(&[1.0], &[0.0], &c));
        assert!(!k.contains(&[1.0], &[-1.0], &c) && !k.contains(&[1.0], &[1.0], &c));
        assert!(k.contains(&[-1.0], &[-4.0], &c) && !k.contains(&[-1.0], &[1.0], &c));
    }

    #[test]
    fn sum_rule_kernel_of_identity_plus_indicator() {
        let s = StructuredMapping::smooth_plus(
            PolyMap::identity(1),
            StructuredMapping::indicator_polyhedral(halfline(), 1),
        )
        .unwrap();
        let c = cfg();
        let k = coderivative(&s, &[0.0], &[0.0], &c).unwrap();
        let ker = coderivative_kernel(&k, &c).unwrap();
        let expected = PolyhedralCone::from_piece(P::nonneg(1, &[0])).unwrap();
        assert!(ker.set_eq(&expected, &c));
        let oracle = coderivative_graph_route(&s, &[0.0], &[0.0], &c).unwrap();
        assert!(k.graph.set_eq(&oracle.graph, &c));
    }

    #[test]
    fn product_rule_matches_graph_route() {
        let r = StructuredMapping::NormalConeMap { set: P::nonneg(1, &[0]) };
        let t = StructuredMapping::constant_polyhedral(1, halfline());
        let p = StructuredMapping::product(r, t);
        let c = cfg();
        let (x, y) = ([0.0, 3.0], [0.0, 0.0]);
        let a = coderivative(&p, &x, &y, &c).unwrap();
        let b = coderivative_graph_route(&p, &x, &y, &c).unwrap();
        assert!(a.graph.set_eq(&b.graph, &c));
        let a = graphical_derivative(&p, &x, &y, &c).unwrap();
        let b = graphical_derivative_graph_route(&p, &x, &y, &c).unwrap();
        assert!(a.graph.set_eq(&b.graph, &c));
    }

    #[test]
    fn off_graph_basepoint_is_rejected() {
        let s = StructuredMapping::indicator_polyhedral(halfline(), 1);
        assert_eq!(coderivative(&s, &[-1.0], &[0.0], &cfg()).unwrap_err(), Error::BasepointOffGraph);
    }
}
