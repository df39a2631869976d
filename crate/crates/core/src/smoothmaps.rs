//! Polynomial maps with exact derivatives, and a numeric path for black-box maps.
//!
//! Orientation: [`PolyMap::jacobian`] returns `∇F(x)`, the transposed Jacobian
//! (`in_dim × out_dim`), so `∇F(x) z` maps output-space multipliers to input space.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat};

/// One monomial `coeff * x1^e1 ... xn^en`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub exps: Vec<u32>,
}

impl Term {
    fn eval(&self, x: &[f64]) -> f64 {
        self.exps.iter().zip(x).fold(self.coeff, |acc, (&e, &v)| acc * v.powi(e as i32))
    }

    fn diff(&self, j: usize) -> Option<Term> {
        let e = self.exps[j];
        if e == 0 {
            return None;
        }
        let mut exps = self.exps.clone();
        exps[j] -= 1;
        Some(Term { coeff: self.coeff * e as f64, exps })
    }

    fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

/// A polynomial map `ℝ^in_dim → ℝ^out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    in_dim: usize,
    out_dim: usize,
    components: Vec<Vec<Term>>,
}

impl PolyMap {
    pub fn new(in_dim: usize, components: Vec<Vec<Term>>) -> Result<Self> {
        if in_dim == 0 || components.is_empty() {
            return Err(Error::Validation("polynomial map dimensions must be positive".into()));
        }
        for c in &components {
            for t in c {
                check_dim("monomial exponents", in_dim, t.exps.len())?;
            }
        }
        Ok(PolyMap { in_dim, out_dim: components.len(), components }.simplified())
    }

    /// Parses one string per output component, e.g. `["x1^2 + x2", "-3*x1*x3 + 0.5"]`.
    pub fn parse(in_dim: usize, components: &[&str]) -> Result<Self> {
        let comps = components
            .iter()
            .enumerate()
            .map(|(i, s)| parse_component(s, in_dim).map_err(|(pos, message)| Error::Parse {
                location: format!("component {} column {}", i + 1, pos + 1),
                message,
            }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(in_dim, comps)
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        PolyMap { in_dim, out_dim, components: vec![vec![]; out_dim] }
    }

    /// `x ↦ M x + c` with `M` of shape `out × in`.
    pub fn affine(m: &Mat, c: &[f64]) -> Self {
        let (out_dim, in_dim) = m.shape();
        let components = (0..out_dim)
            .map(|i| {
                let mut terms: Vec<Term> = (0..in_dim)
                    .map(|j| Term { coeff: m[(i, j)], exps: (0..in_dim).map(|k| (k == j) as u32).collect() })
                    .collect();
                terms.push(Term { coeff: c[i], exps: vec![0; in_dim] });
                terms
            })
            .collect();
        PolyMap { in_dim, out_dim, components }.simplified()
    }

    pub fn identity(n: usize) -> Self {
        Self::affine(&Mat::identity(n, n), &vec![0.0; n])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }
    pub fn components(&self) -> &[Vec<Term>] {
        &self.components
    }

    fn simplified(mut self) -> Self {
        for c in self.components.iter_mut() {
            let mut merged: Vec<Term> = Vec::new();
            for t in c.drain(..) {
                match merged.iter_mut().find(|m| m.exps == t.exps) {
                    Some(m) => m.coeff += t.coeff,
                    None => merged.push(t),
                }
            }
            merged.retain(|t| t.coeff != 0.0);
            *c = merged;
        }
        self
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().flatten().map(Term::degree).max().unwrap_or(0)
    }

    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("polynomial argument", self.in_dim, x.len())?;
        Ok(self.components.iter().map(|c| c.iter().map(|t| t.eval(x)).sum()).collect())
    }

    /// `∂F_i/∂x_j` as a polynomial.
    fn partial(&self, i: usize, j: usize) -> Vec<Term> {
        self.components[i].iter().filter_map(|t| t.diff(j)).collect()
    }

    /// `∇F(x)`: entry `(j, i)` is `∂F_i/∂x_j`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Mat> {
        check_dim("jacobian argument", self.in_dim, x.len())?;
        Ok(Mat::from_fn(self.in_dim, self.out_dim, |j, i| self.partial(i, j).iter().map(|t| t.eval(x)).sum()))
    }

    /// `(∇F)′(x; w)`, the directional derivative of the transposed Jacobian field.
    pub fn jacobian_semiderivative(&self, x: &[f64], w: &[f64]) -> Result<Mat> {
        check_dim("semiderivative argument", self.in_dim, x.len())?;
        check_dim("semiderivative direction", self.in_dim, w.len())?;
        Ok(Mat::from_fn(self.in_dim, self.out_dim, |j, i| {
            let dij = self.partial(i, j);
            (0..self.in_dim)
                .map(|k| w[k] * dij.iter().filter_map(|t| t.diff(k)).map(|t| t.eval(x)).sum::<f64>())
                .sum()
        }))
    }

    /// Directional derivative `F′(x) w` (the usual Jacobian applied to `w`).
    pub fn derivative_apply(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let g = self.jacobian(x)?;
        check_dim("derivative direction", self.in_dim, w.len())?;
        Ok(linalg::mat_t_vec(&g, w))
    }

    /// Same polynomial viewed on `ℝ^total`, variable `k` placed at `coords[k]`.
    pub fn embed_inputs(&self, total: usize, coords: &[usize]) -> PolyMap {
        let components = self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .map(|t| {
                        let mut exps = vec![0; total];
                        for (k, &e) in t.exps.iter().enumerate() {
                            exps[coords[k]] = e;
                        }
                        Term { coeff: t.coeff, exps }
                    })
                    .collect()
            })
            .collect();
        PolyMap { in_dim: total, out_dim: self.out_dim, components }
    }

    /// Output components of `self` followed by those of `other` (same inputs).
    pub fn stack(&self, other: &PolyMap) -> Result<PolyMap> {
        check_dim("stacked inputs", self.in_dim, other.in_dim)?;
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Ok(PolyMap { in_dim: self.in_dim, out_dim: components.len(), components })
    }

    pub fn add(&self, other: &PolyMap) -> Result<PolyMap> {
        check_dim("summand inputs", self.in_dim, other.in_dim)?;
        check_dim("summand outputs", self.out_dim, other.out_dim)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().chain(b.iter()).cloned().collect())
            .collect();
        Ok(PolyMap { in_dim: self.in_dim, out_dim: self.out_dim, components }.simplified())
    }

    pub fn scaled(&self, s: f64) -> PolyMap {
        let components = self
            .components
            .iter()
            .map(|c| c.iter().map(|t| Term { coeff: t.coeff * s, exps: t.exps.clone() }).collect())
            .collect();
        PolyMap { in_dim: self.in_dim, out_dim: self.out_dim, components }.simplified()
    }

    /// `∂F/∂x_j`, componentwise.
    pub fn partial_derivative(&self, j: usize) -> Result<PolyMap> {
        if j >= self.in_dim {
            return Err(Error::DimensionMismatch { context: "partial derivative variable".into(), expected: self.in_dim, found: j + 1 });
        }
        let components = self.components.iter().map(|c| c.iter().filter_map(|t| t.diff(j)).collect()).collect();
        Ok(PolyMap { in_dim: self.in_dim, out_dim: self.out_dim, components }.simplified())
    }

    /// Product of two scalar polynomials.
    pub fn mul_scalar_poly(a: &[Term], b: &[Term]) -> Vec<Term> {
        let mut out = Vec::new();
        for s in a {
            for t in b {
                out.push(Term { coeff: s.coeff * t.coeff, exps: s.exps.iter().zip(&t.exps).map(|(x, y)| x + y).collect() });
            }
        }
        out
    }

    /// Text form, one string per component; parses back to an equal map.
    pub fn to_strings(&self) -> Vec<String> {
        self.components.iter().map(|c| format_component(c)).collect()
    }
}

fn format_component(c: &[Term]) -> String {
    if c.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, t) in c.iter().enumerate() {
        let neg = t.coeff < 0.0;
        if k > 0 {
            s.push_str(if neg { " - " } else { " + " });
        } else if neg {
            s.push('-');
        }
        let mag = t.coeff.abs();
        let vars: Vec<String> = t
            .exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, &e)| if e == 1 { format!("x{}", j + 1) } else { format!("x{}^{}", j + 1, e) })
            .collect();
        if vars.is_empty() {
            s.push_str(&format!("{mag:?}"));
        } else {
            if mag != 1.0 {
                s.push_str(&format!("{mag:?}*"));
            }
            s.push_str(&vars.join("*"));
        }
    }
    s
}

impl fmt::Display for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct PolyMapText {
    in_dim: usize,
    components: Vec<String>,
}

impl Serialize for PolyMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyMapText { in_dim: self.in_dim, components: self.to_strings() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let t = PolyMapText::deserialize(d)?;
        let refs: Vec<&str> = t.components.iter().map(String::as_str).collect();
        PolyMap::parse(t.in_dim, &refs).map_err(serde::de::Error::custom)
    }
}

type ParseResult<T> = std::result::Result<T, (usize, String)>;

fn parse_component(src: &str, in_dim: usize) -> ParseResult<Vec<Term>> {
    let b = src.as_bytes();
    let mut pos = 0;
    let skip = |pos: &mut usize| {
        while *pos < b.len() && b[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let number = |pos: &mut usize| -> ParseResult<f64> {
        let start = *pos;
        while *pos < b.len() && (b[*pos].is_ascii_digit() || b[*pos] == b'.') {
            *pos += 1;
        }
        if *pos < b.len() && (b[*pos] == b'e' || b[*pos] == b'E') {
            let save = *pos;
            *pos += 1;
            if *pos < b.len() && (b[*pos] == b'+' || b[*pos] == b'-') {
                *pos += 1;
            }
            if *pos < b.len() && b[*pos].is_ascii_digit() {
                while *pos < b.len() && b[*pos].is_ascii_digit() {
                    *pos += 1;
                }
            } else {
                *pos = save;
            }
        }
        src[start..*pos].parse::<f64>().map_err(|_| (start, format!("bad number '{}'", &src[start..*pos])))
    };
    let integer = |pos: &mut usize| -> ParseResult<usize> {
        let start = *pos;
        while *pos < b.len() && b[*pos].is_ascii_digit() {
            *pos += 1;
        }
        src[start..*pos].parse::<usize>().map_err(|_| (start, "expected an integer".to_string()))
    };

    let mut terms = Vec::new();
    skip(&mut pos);
    if pos == b.len() {
        return Err((pos, "empty component".into()));
    }
    let mut first = true;
    loop {
        skip(&mut pos);
        let mut sign = 1.0;
        if pos < b.len() && (b[pos] == b'+' || b[pos] == b'-') {
            if b[pos] == b'-' {
                sign = -1.0;
            }
            pos += 1;
        } else if !first {
            return Err((pos, "expected '+' or '-'".into()));
        }
        first = false;
        let mut term = Term { coeff: sign, exps: vec![0; in_dim] };
        loop {
            skip(&mut pos);
            if pos >= b.len() {
                return Err((pos, "expected a factor".into()));
            }
            if b[pos] == b'x' {
                pos += 1;
                let at = pos;
                let idx = integer(&mut pos)?;
                if idx == 0 || idx > in_dim {
                    return Err((at, format!("variable x{idx} out of range 1..={in_dim}")));
                }
                skip(&mut pos);
                let mut e = 1;
                if pos < b.len() && b[pos] == b'^' {
                    pos += 1;
                    skip(&mut pos);
                    e = integer(&mut pos)? as u32;
                }
                term.exps[idx - 1] += e;
            } else if b[pos].is_ascii_digit() || b[pos] == b'.' {
                term.coeff *= number(&mut pos)?;
            } else {
                return Err((pos, format!("unexpected character '{}'", b[pos] as char)));
            }
            skip(&mut pos);
            if pos < b.len() && b[pos] == b'*' {
                pos += 1;
                continue;
            }
            break;
        }
        terms.push(term);
        skip(&mut pos);
        if pos == b.len() {
            return Ok(terms);
        }
    }
}

/// A deterministic map given by a callback. Only numeric guarantees are available.
#[derive(Clone)]
pub struct BlackBoxMap {
    in_dim: usize,
    out_dim: usize,
    f: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl fmt::Debug for BlackBoxMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlackBoxMap({} -> {})", self.in_dim, self.out_dim)
    }
}

impl BlackBoxMap {
    pub fn new(in_dim: usize, out_dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        BlackBoxMap { in_dim, out_dim, f: Arc::new(f) }
    }

    pub fn from_poly(p: PolyMap) -> Self {
        let (i, o) = (p.in_dim, p.out_dim);
        Self::new(i, o, move |x| p.evaluate(x).expect("dimension checked by caller"))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("black-box argument", self.in_dim, x.len())?;
        let y = (self.f)(x);
        check_dim("black-box output", self.out_dim, y.len())?;
        Ok(y)
    }

    /// Central-difference `∇F(x)` (transposed Jacobian).
    pub fn jacobian(&self, x: &[f64]) -> Result<Mat> {
        let h = 1e-6;
        let mut m = Mat::zeros(self.in_dim, self.out_dim);
        for j in 0..self.in_dim {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (self.evaluate(&xp)?, self.evaluate(&xm)?);
            for i in 0..self.out_dim {
                m[(j, i)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(m)
    }
}

/// Estimate and tail dispersion of a difference-quotient limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiderivativeEstimate {
    pub value: Vec<f64>,
    pub dispersion: f64,
}

/// Default schedule `τ = 10^-k`, `k = 2..6`.
pub fn default_schedule() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(-k)).collect()
}

/// Forward difference quotients `(F(x + τw) − F(x))/τ` with one Richardson step per level.
pub fn numeric_semiderivative(
    map: &BlackBoxMap,
    x: &[f64],
    w: &[f64],
    schedule: &[f64],
    tol_semi: f64,
) -> Result<SemiderivativeEstimate> {
    check_dim("semiderivative direction", map.in_dim, w.len())?;
    if schedule.is_empty() || schedule.windows(2).any(|p| p[1] >= p[0]) || schedule.iter().any(|t| *t <= 0.0) {
        return Err(Error::Validation("schedule must be positive and strictly decreasing".into()));
    }
    let f0 = map.evaluate(x)?;
    let quotient = |t: f64| -> Result<Vec<f64>> {
        let ft = map.evaluate(&linalg::axpy(x, t, w))?;
        Ok(linalg::scale(&linalg::sub(&ft, &f0), 1.0 / t))
    };
    let mut levels = Vec::new();
    for &t in schedule {
        let q1 = quotient(t)?;
        let q2 = quotient(t / 2.0)?;
        levels.push(linalg::sub(&linalg::scale(&q2, 2.0), &q1));
    }
    let tail = &levels[levels.len().saturating_sub(3)..];
    let value = tail.last().unwrap().clone();
    let dispersion = tail.iter().map(|v| linalg::norm_inf(&linalg::sub(v, &value))).fold(0.0, f64::max);
    if !(dispersion <= tol_semi) || value.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergent(format!("semiderivative dispersion {dispersion:.3e}")));
    }
    Ok(SemiderivativeEstimate { value, dispersion })
}

/// A smooth part: exact polynomial or numeric black box.
#[derive(Debug, Clone)]
pub enum SmoothMap {
    Poly(PolyMap),
    BlackBox(BlackBoxMap),
}

impl From<PolyMap> for SmoothMap {
    fn from(p: PolyMap) -> Self {
        SmoothMap::Poly(p)
    }
}

impl SmoothMap {
    pub fn in_dim(&self) -> usize {
        match self {
            SmoothMap::Poly(p) => p.in_dim,
            SmoothMap::BlackBox(b) => b.in_dim,
        }
    }
    pub fn out_dim(&self) -> usize {
        match self {
            SmoothMap::Poly(p) => p.out_dim,
            SmoothMap::BlackBox(b) => b.out_dim,
        }
    }
    pub fn is_exact(&self) -> bool {
        matches!(self, SmoothMap::Poly(_))
    }
    pub fn as_poly(&self) -> Option<&PolyMap> {
        match self {
            SmoothMap::Poly(p) => Some(p),
            SmoothMap::BlackBox(_) => None,
        }
    }
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            SmoothMap::Poly(p) => p.evaluate(x),
            SmoothMap::BlackBox(b) => b.evaluate(x),
        }
    }
    pub fn jacobian(&self, x: &[f64]) -> Result<Mat> {
        match self {
            SmoothMap::Poly(p) => p.jacobian(x),
            SmoothMap::BlackBox(b) => b.jacobian(x),
        }
    }
    pub fn jacobian_semiderivative(&self, x: &[f64], w: &[f64]) -> Result<Mat> {
        match self {
            SmoothMap::Poly(p) => p.jacobian_semiderivative(x, w),
            SmoothMap::BlackBox(b) => {
                let (n, m) = (b.in_dim, b.out_dim);
                let bb = b.clone();
                let field = BlackBoxMap::new(n, n * m, move |y| {
                    let g = bb.jacobian(y).expect("dimension checked");
                    g.iter().copied().collect()
                });
                let est = numeric_semiderivative(&field, x, w, &[1e-2, 1e-3, 1e-4], 1e-3)?;
                Ok(Mat::from_column_slice(n, m, &est.value))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex511() -> PolyMap {
        PolyMap::parse(3, &["x1^2 + x2 + x3^2", "x1"]).unwrap()
    }

    #[test]
    fn jacobian_examples() {
        let sq = PolyMap::parse(1, &["x1^2"]).unwrap();
        assert_eq!(sq.jacobian(&[3.0]).unwrap()[(0, 0)], 6.0);
        let g = ex511().jacobian(&[0.5, -1.0, 2.0]).unwrap();
        let expected = Mat::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 4.0, 0.0]);
        assert_eq!(g, expected);
        let z = PolyMap::zero(2, 3);
        assert_eq!(z.jacobian(&[1.0, 2.0]).unwrap(), Mat::zeros(2, 3));
        assert!(matches!(sq.jacobian(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn jacobian_semiderivative_examples() {
        let d = ex511().jacobian_semiderivative(&[0.0; 3], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d, Mat::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 2.0, 0.0]));
        let aff = PolyMap::parse(2, &["3*x1 - x2 + 1", "x2"]).unwrap();
        assert_eq!(aff.jacobian_semiderivative(&[1.0, 1.0], &[0.3, 0.7]).unwrap(), Mat::zeros(2, 2));
        // 𝒜(ξ) = (ξ, ξ²): 𝒜′(0; 1) = (1, 0)
        let a = PolyMap::parse(1, &["x1", "x1^2"]).unwrap();
        assert_eq!(a.derivative_apply(&[0.0], &[1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn parse_and_roundtrip() {
        let p = PolyMap::parse(2, &["-2.5*x1^2*x2 + x2 - 1e-3", "0"]).unwrap();
        assert_eq!(p.evaluate(&[2.0, 1.0]).unwrap(), vec![-10.0 + 1.0 - 1e-3, 0.0]);
        let again = PolyMap::parse(2, &p.to_strings().iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        assert_eq!(p, again);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<PolyMap>(&json).unwrap(), p);
    }

    #[test]
    fn parse_errors_carry_location() {
        match PolyMap::parse(2, &["x1", "x1 + * x2"]) {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("component 2 column 6")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(PolyMap::parse(2, &["x3"]), Err(Error::Parse { .. })));
        assert!(matches!(PolyMap::parse(1, &["x1 x1"]), Err(Error::Parse { .. })));
    }

    #[test]
    fn numeric_semiderivative_examples() {
        let abs = BlackBoxMap::new(1, 1, |x| vec![x[0].abs()]);
        let e = numeric_semiderivative(&abs, &[0.0], &[1.0], &default_schedule(), 1e-6).unwrap();
        assert_eq!(e.value, vec![1.0]);
        let c = BlackBoxMap::new(2, 1, |_| vec![4.0]);
        let e = numeric_semiderivative(&c, &[1.0, 2.0], &[1.0, 0.0], &default_schedule(), 1e-12).unwrap();
        assert_eq!((e.value, e.dispersion), (vec![0.0], 0.0));
        // wrapped Jacobian field reproduces the exact semiderivative
        let f = ex511();
        let g = f.clone();
        let field = BlackBoxMap::new(3, 6, move |x| g.jacobian(x).unwrap().iter().copied().collect());
        let x = [0.3, -0.2, 0.1];
        let w = [0.5, 0.0, 1.0];
        let e = numeric_semiderivative(&field, &x, &w, &default_schedule(), 1e-5).unwrap();
        let exact = f.jacobian_semiderivative(&x, &w).unwrap();
        for (a, b) in e.value.iter().zip(exact.iter()) {
            assert!((a - b).abs() < 1e-5);
        }
        let osc = BlackBoxMap::new(1, 1, |x| vec![if x[0] == 0.0 { 0.0 } else { (1.0 / x[0]).sin() * x[0].abs() }]);
        assert!(numeric_semiderivative(&osc, &[0.0], &[1.0], &default_schedule(), 1e-3).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn poly(in_dim: usize) -> impl Strategy<Value = PolyMap> {
            let term = (-3i32..=3, proptest::collection::vec(0u32..3, in_dim))
                .prop_map(|(c, exps)| Term { coeff: c as f64, exps });
            proptest::collection::vec(proptest::collection::vec(term, 0..4), 1..3)
                .prop_map(move |comps| PolyMap::new(in_dim, comps).unwrap())
        }

        fn vec3() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-1.0f64..1.0, 3)
        }

        proptest! {
            #[test]
            fn jacobian_matches_finite_differences(p in poly(3), x in vec3()) {
                let g = p.jacobian(&x).unwrap();
                let n = BlackBoxMap::from_poly(p).jacobian(&x).unwrap();
                prop_assert!((g - n).amax() < 1e-6);
            }

            #[test]
            fn semiderivative_is_homogeneous(p in poly(3), x in vec3(), w in vec3(), r in 0.1f64..5.0) {
                let a = p.jacobian_semiderivative(&x, &linalg::scale(&w, r)).unwrap();
                let b = p.jacobian_semiderivative(&x, &w).unwrap() * r;
                prop_assert!((a - b).amax() < 1e-9);
            }

            #[test]
            fn expansion_remainder_vanishes(p in poly(3), x in vec3(), w in vec3()) {
                let d = p.jacobian_semiderivative(&x, &w).unwrap();
                let g0 = p.jacobian(&x).unwrap();
                let mut prev = f64::INFINITY;
                for t in default_schedule() {
                    let gt = p.jacobian(&linalg::axpy(&x, t, &w)).unwrap();
                    let r = (gt - &g0 - &d * t).amax() / t;
                    prop_assert!(r <= prev.max(1e-9) + 1e-9);
                    prev = r;
                }
                prop_assert!(prev < 1e-4);
            }

            #[test]
            fn text_roundtrip(p in poly(3)) {
                let s = p.to_strings();
                let refs: Vec<&str> = s.iter().map(String::as_str).collect();
                prop_assert_eq!(PolyMap::parse(3, &refs).unwrap(), p);
            }

            #[test]
            fn black_box_is_deterministic(p in poly(3), x in vec3()) {
                let b = BlackBoxMap::from_poly(p);
                prop_assert_eq!(b.evaluate(&x).unwrap(), b.evaluate(&x).unwrap());
            }
        }
    }
}
