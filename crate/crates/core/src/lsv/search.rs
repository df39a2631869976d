//! Minimizing `‖η‖` over graph points `(z, η)` with `‖z‖ = 1`.
//!
//! Conic pieces are solved exactly. On the span of each face the ratio
//! `‖η‖/‖z‖` is a function of the Rayleigh quotient of `Bηᵀ Bη` for an
//! orthonormal face basis `B = [Bz; Bη]`, so every local minimizer inside a
//! face is an eigenvector; a candidate counts when its eigenspace meets the
//! face. Other pieces fall back to a search over the unit sphere inside the
//! affine hull of their domain.

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{self, Mat};
use crate::polyhedra::{qp, ConvexPolyhedron, PolyhedralCone, PolyhedralSet, Row};
use crate::Config;

const EIG_GROUP: f64 = 1e-9;
const GRID_2D: usize = 720;
const GRID_3D: usize = 4000;
const MULTISTARTS: usize = 64;
const REFINE_KEEP: usize = 8;

/// Value of an LSV minimization with the minimizing unit `z` when one was found.
#[derive(Debug, Clone, PartialEq)]
pub struct LsvValue {
    pub value: f64,
    /// False when some piece went through the sampled sphere search.
    pub exact: bool,
    pub argmin: Option<Vec<f64>>,
}

impl LsvValue {
    pub fn infinite() -> Self {
        LsvValue { value: f64::INFINITY, exact: true, argmin: None }
    }

    fn merge(&mut self, other: LsvValue) {
        self.exact &= other.exact;
        if other.value < self.value {
            self.value = other.value;
            self.argmin = other.argmin;
        }
    }
}

/// `inf_{‖z‖=1} d(0, K(z))` for the map whose graph is `graph ⊂ ℝ^{z_dim} × ℝ^q`.
pub fn lsv_of_graph(graph: &PolyhedralSet, z_dim: usize, cfg: &Config) -> Result<LsvValue> {
    let mut best = LsvValue::infinite();
    for piece in graph.pieces() {
        if piece.is_empty(cfg) {
            continue;
        }
        let v = if piece.is_homogeneous() && !cfg.numeric_only {
            exact_cone_piece(piece, z_dim, cfg)?
        } else {
            sphere_search(piece, z_dim, cfg)?
        };
        best.merge(v);
        if best.value == 0.0 && best.exact {
            break;
        }
    }
    Ok(best)
}

/// Orthonormal basis of the span of the face with closed active set `active`.
fn face_basis(piece: &ConvexPolyhedron, active: &[usize]) -> Mat {
    let dim = piece.dim();
    let rows: Vec<Vec<f64>> = active
        .iter()
        .map(|&i| piece.inequalities()[i].0.clone())
        .chain(piece.equalities().iter().map(|(a, _)| a.clone()))
        .collect();
    if rows.is_empty() {
        return Mat::identity(dim, dim);
    }
    linalg::null_space(&linalg::mat_from_rows(&rows, dim))
}

/// Eigen-groups `(value, vectors)` of a symmetric matrix, ascending.
fn eigen_groups(s: Mat) -> Vec<(f64, Mat)> {
    let k = s.nrows();
    let eig = SymmetricEigen::new(s);
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut out: Vec<(f64, Mat)> = Vec::new();
    let mut i = 0;
    while i < k {
        let v0 = eig.eigenvalues[idx[i]];
        let mut j = i;
        while j < k && eig.eigenvalues[idx[j]] - v0 <= EIG_GROUP {
            j += 1;
        }
        let cols: Vec<usize> = idx[i..j].to_vec();
        let vecs = Mat::from_fn(k, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])]);
        out.push((v0, vecs));
        i = j;
    }
    out
}

/// Nonzero `t` with `x = B V t` satisfying the inactive inequalities of the piece.
fn face_witness(piece: &ConvexPolyhedron, active: &[usize], bv: &Mat, cfg: &Config) -> Option<Vec<f64>> {
    let g = bv.ncols();
    let rows: Vec<Row> = (0..piece.inequalities().len())
        .filter(|i| !active.contains(i))
        .map(|i| (linalg::mat_t_vec(bv, &piece.inequalities()[i].0), 0.0))
        .collect();
    let cone = PolyhedralCone::from_piece(ConvexPolyhedron::new(g, rows, vec![]).ok()?).ok()?;
    cone.nonzero_witness(cfg)
}

fn exact_cone_piece(piece: &ConvexPolyhedron, z_dim: usize, cfg: &Config) -> Result<LsvValue> {
    let dim = piece.dim();
    let q = dim - z_dim;
    // kernel first: a point with η = 0 and z ≠ 0 gives the value 0 exactly
    let eta_zero: Vec<Row> = (z_dim..dim).map(|j| (unit(dim, j), 0.0)).collect();
    let ker = PolyhedralCone::from_piece(piece.with_rows(vec![], eta_zero))?;
    if let Some(w) = ker.nonzero_witness_in(&(0..z_dim).collect::<Vec<_>>(), cfg) {
        let z = &w[..z_dim];
        return Ok(LsvValue { value: 0.0, exact: true, argmin: Some(linalg::scale(z, 1.0 / linalg::norm(z))) });
    }
    let mut best = LsvValue::infinite();
    for active in piece.faces(cfg)? {
        let b = face_basis(piece, &active);
        if b.ncols() == 0 {
            continue;
        }
        let bz = b.rows(0, z_dim).into_owned();
        let be = b.rows(z_dim, q).into_owned();
        for (s, v) in eigen_groups(be.transpose() * &be) {
            if s >= 1.0 - 1e-12 {
                continue;
            }
            let bv = &b * &v;
            if let Some(t) = face_witness(piece, &active, &bv, cfg) {
                let val = (s.max(0.0) / (1.0 - s)).sqrt();
                if val < best.value {
                    let z = linalg::mat_vec(&(&bz * &v), &t);
                    let nz = linalg::norm(&z);
                    best = LsvValue { value: val, exact: true, argmin: Some(linalg::scale(&z, 1.0 / nz)) };
                }
            }
        }
    }
    Ok(best)
}

/// `sup ‖z‖/‖η‖` over a conic graph by the same face decomposition; `+inf` with a nontrivial kernel.
pub fn outer_norm_of_graph(graph: &PolyhedralCone, z_dim: usize, cfg: &Config) -> Result<f64> {
    let dim = graph.dim();
    let eta_zero: Vec<Row> = (z_dim..dim).map(|j| (unit(dim, j), 0.0)).collect();
    let mut best: f64 = 0.0;
    for piece in graph.pieces() {
        let ker = PolyhedralCone::from_piece(piece.with_rows(vec![], eta_zero.clone()))?;
        if ker.nonzero_witness_in(&(0..z_dim).collect::<Vec<_>>(), cfg).is_some() {
            return Ok(f64::INFINITY);
        }
        for active in piece.faces(cfg)? {
            let b = face_basis(piece, &active);
            if b.ncols() == 0 {
                continue;
            }
            let bz = b.rows(0, z_dim).into_owned();
            // ‖z‖²/‖η‖² = t/(1 - t) for t the Rayleigh quotient of Bzᵀ Bz
            for (t, v) in eigen_groups(bz.transpose() * &bz) {
                if t <= 1e-14 || t >= 1.0 - 1e-14 {
                    continue;
                }
                let bv = &b * &v;
                if face_witness(piece, &active, &bv, cfg).is_some() {
                    best = best.max((t / (1.0 - t)).sqrt());
                }
            }
        }
    }
    Ok(best)
}

fn unit(dim: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[j] = 1.0;
    v
}

/// `d(0, {η : (z, η) ∈ piece})`.
fn slice_distance(piece: &ConvexPolyhedron, z: &[f64], cfg: &Config) -> f64 {
    let k = z.len();
    let cut = |(a, b): &Row| -> Row { (a[k..].to_vec(), b - linalg::dot(&a[..k], z)) };
    let ineq: Vec<Row> = piece.inequalities().iter().map(cut).collect();
    let eq: Vec<Row> = piece.equalities().iter().map(cut).collect();
    let q = piece.dim() - k;
    // rows without η-part are pure conditions on z
    for (a, b) in ineq.iter() {
        if linalg::norm_inf(a) <= 1e-14 && *b < -cfg.tol_mem {
            return f64::INFINITY;
        }
    }
    for (a, b) in eq.iter() {
        if linalg::norm_inf(a) <= 1e-14 && b.abs() > cfg.tol_mem {
            return f64::INFINITY;
        }
    }
    let ineq: Vec<Row> = ineq.into_iter().filter(|(a, _)| linalg::norm_inf(a) > 1e-14).collect();
    let eq: Vec<Row> = eq.into_iter().filter(|(a, _)| linalg::norm_inf(a) > 1e-14).collect();
    qp::distance(&vec![0.0; q], &ineq, &eq, cfg.tol_lp)
}

/// Unit sphere of the affine hull of the domain, parametrized as `z₀ + r V u` with `‖u‖ = 1`.
struct SphereChart {
    z0: Vec<f64>,
    r: f64,
    v: Mat,
}

impl SphereChart {
    fn point(&self, u: &[f64]) -> Vec<f64> {
        let t = linalg::mat_vec(&self.v, u);
        linalg::axpy(&self.z0, self.r, &t)
    }
}

fn sphere_search(piece: &ConvexPolyhedron, z_dim: usize, cfg: &Config) -> Result<LsvValue> {
    let Some(dom) = piece.project(&(0..z_dim).collect::<Vec<_>>(), cfg) else {
        return Ok(LsvValue::infinite());
    };
    let Some((m, c)) = dom.affine_hull(cfg) else {
        return Ok(LsvValue::infinite());
    };
    let (z0, v) = if m.is_empty() {
        (vec![0.0; z_dim], Mat::identity(z_dim, z_dim))
    } else {
        let mm = linalg::mat_from_rows(&m, z_dim);
        (linalg::lstsq(&mm, &c), linalg::null_space(&mm))
    };
    let r2 = 1.0 - linalg::dot(&z0, &z0);
    if r2 < -1e-12 {
        return Ok(LsvValue::infinite());
    }
    let chart = SphereChart { z0, r: r2.max(0.0).sqrt(), v };
    let d = chart.v.ncols();
    let f = |u: &[f64]| -> f64 {
        let z = chart.point(u);
        if !dom.contains(&z, 1e-9) {
            return f64::INFINITY;
        }
        slice_distance(piece, &z, cfg)
    };
    if d == 0 || chart.r <= 1e-12 {
        let val = f(&vec![0.0; d]);
        let argmin = val.is_finite().then(|| chart.z0.clone());
        return Ok(LsvValue { value: val, exact: false, argmin });
    }
    let starts: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else if d == 2 && !cfg.numeric_only {
        (0..GRID_2D)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / GRID_2D as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()
    } else if d == 3 && !cfg.numeric_only {
        fibonacci_sphere(GRID_3D)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..MULTISTARTS).map(|_| linalg::random_unit(&mut rng, d)).collect()
    };
    let mut scored: Vec<(f64, Vec<f64>)> = starts.into_iter().map(|u| (f(&u), u)).collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let spacing = match d {
        1 => 0.0,
        2 if !cfg.numeric_only => 2.0 * std::f64::consts::PI / GRID_2D as f64,
        3 if !cfg.numeric_only => (4.0 * std::f64::consts::PI / GRID_3D as f64).sqrt(),
        _ => 0.5,
    };
    let mut best = LsvValue { value: f64::INFINITY, exact: false, argmin: None };
    for (val, u) in scored.into_iter().take(REFINE_KEEP) {
        if !val.is_finite() {
            continue;
        }
        let (val, u) = if spacing > 0.0 { pattern_search(&f, u, val, spacing) } else { (val, u) };
        if val < best.value {
            best = LsvValue { value: val, exact: false, argmin: Some(chart.point(&u)) };
        }
    }
    Ok(best)
}

fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let y = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let th = golden * k as f64;
            vec![r * th.cos(), y, r * th.sin()]
        })
        .collect()
}

/// Coordinate pattern search on the sphere with halving steps.
fn pattern_search(f: &dyn Fn(&[f64]) -> f64, mut u: Vec<f64>, mut val: f64, mut step: f64) -> (f64, Vec<f64>) {
    let d = u.len();
    while step > 1e-11 {
        let mut improved = false;
        for k in 0..d {
            for s in [1.0, -1.0] {
                let mut w = u.clone();
                w[k] += s * step;
                let n = linalg::norm(&w);
                let w = linalg::scale(&w, 1.0 / n);
                let fw = f(&w);
                if fw < val {
                    val = fw;
                    u = w;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (val, u)
}
