//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;

const RANK_EPS: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn mat_from_rows(rows: &[Vec<f64>], ncols: usize) -> Mat {
    Mat::from_fn(rows.len(), ncols, |r, c| rows[r][c])
}

pub fn mat_vec(m: &Mat, x: &[f64]) -> Vec<f64> {
    let v = m * DVector::from_column_slice(x);
    v.iter().copied().collect()
}

pub fn mat_t_vec(m: &Mat, x: &[f64]) -> Vec<f64> {
    let v = m.transpose() * DVector::from_column_slice(x);
    v.iter().copied().collect()
}

pub fn rows_of(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

pub fn cols_of(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|c| m.column(c).iter().copied().collect()).collect()
}

fn svd_parts(m: &Mat) -> (Vec<f64>, Mat) {
    // returns singular values and the full right-singular basis (ncols x ncols)
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return (vec![], Mat::identity(n, n));
    }
    // pad to at least n rows so that V is square
    let padded = if m.nrows() < n {
        let mut p = Mat::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let v = Mat::from_fn(n, n, |r, c| vt[(idx[c], r)]);
    (sv, v)
}

/// Numerical rank with a relative threshold.
pub fn rank(m: &Mat) -> usize {
    let (sv, _) = svd_parts(m);
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > RANK_EPS * top.max(1.0)).count()
}

/// Orthonormal basis of the null space of `m`, as columns.
pub fn null_space(m: &Mat) -> Mat {
    let n = m.ncols();
    let (sv, v) = svd_parts(m);
    let top = sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().filter(|&&s| s > RANK_EPS * top.max(1.0)).count();
    v.columns(r, n - r).into_owned()
}

/// Orthonormal basis of the row space of `m`, as columns.
pub fn row_space(m: &Mat) -> Mat {
    let (sv, v) = svd_parts(m);
    let top = sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().filter(|&&s| s > RANK_EPS * top.max(1.0)).count();
    v.columns(0, r).into_owned()
}

/// Least-squares solution of `m x = b` with minimal norm.
pub fn lstsq(m: &Mat, b: &[f64]) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![0.0; m.ncols()];
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.max();
    let x = svd
        .solve(&DVector::from_column_slice(b), RANK_EPS * top.max(1e-300))
        .expect("svd solve");
    x.iter().copied().collect()
}

/// Least singular value of a matrix viewed as a map on its column space (`min_{|x|=1} |M x|`).
pub fn least_singular_value(m: &Mat) -> f64 {
    if m.ncols() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    let sv = m.clone().singular_values();
    sv.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Uniformly distributed unit vector (rejection from the cube).
pub fn random_unit<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return scale(&v, 1.0 / r);
        }
    }
}

/// Matrix with the given columns.
pub fn mat_from_cols(cols: &[Vec<f64>], nrows: usize) -> Mat {
    Mat::from_fn(nrows, cols.len(), |r, c| cols[c][r])
}
