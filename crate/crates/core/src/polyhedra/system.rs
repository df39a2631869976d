//! Homogeneous systems mixing linear equations with cone memberships.
//!
//! Most regularity conditions read "the only solution of these inclusions is
//! zero". Auxiliary variables turn each inclusion into a linear equation plus
//! a membership in a polyhedral cone; the solution set is a union over the
//! piece choices of every membership.

use super::{ConvexPolyhedron, PolyhedralCone, PolyhedralSet, Row};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Mat;
use crate::Config;

#[derive(Debug, Clone, Default)]
pub struct ConeSystem {
    dim: usize,
    eqs: Vec<Row>,
    members: Vec<(PolyhedralCone, Vec<usize>)>,
}

impl ConeSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocates `n` fresh variables.
    pub fn block(&mut self, n: usize) -> Vec<usize> {
        let out: Vec<usize> = (self.dim..self.dim + n).collect();
        self.dim += n;
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Σ_k M_k x[idx_k] = 0`; every `M_k` has the same number of rows.
    pub fn equation(&mut self, terms: &[(&Mat, &[usize])]) -> Result<()> {
        let rows = terms.first().map_or(0, |(m, _)| m.nrows());
        for (m, idx) in terms {
            check_dim("equation rows", rows, m.nrows())?;
            check_dim("equation columns", idx.len(), m.ncols())?;
        }
        for r in 0..rows {
            let mut v = vec![0.0; self.dim];
            for (m, idx) in terms {
                for (c, &i) in idx.iter().enumerate() {
                    v[i] += m[(r, c)];
                }
            }
            self.eqs.push((v, 0.0));
        }
        Ok(())
    }

    /// `x[a] = x[b]` coordinatewise.
    pub fn equal(&mut self, a: &[usize], b: &[usize]) -> Result<()> {
        let n = a.len();
        let id = Mat::identity(n, n);
        self.equation(&[(&id, a), (&(-id.clone()), b)])
    }

    pub fn zero(&mut self, idx: &[usize]) {
        for &i in idx {
            let mut v = vec![0.0; self.dim];
            v[i] = 1.0;
            self.eqs.push((v, 0.0));
        }
    }

    /// `x[idx] ∈ cone`.
    pub fn member(&mut self, cone: &PolyhedralCone, idx: &[usize]) -> Result<()> {
        check_dim("membership", cone.dim(), idx.len())?;
        self.members.push((cone.clone(), idx.to_vec()));
        Ok(())
    }

    /// The full solution cone.
    pub fn solutions(&self, cfg: &Config) -> Result<PolyhedralCone> {
        let dim = self.dim;
        let pad = |v: &[f64]| {
            let mut w = v.to_vec();
            w.resize(dim, 0.0);
            w
        };
        let base = ConvexPolyhedron::raw(dim, vec![], self.eqs.iter().map(|(a, b)| (pad(a), *b)).collect());
        let mut acc = vec![base];
        for (cone, idx) in &self.members {
            let mut next = Vec::new();
            for p in &acc {
                for q in cone.pieces() {
                    next.push(p.intersect(&q.embed(dim, idx))?);
                    if next.len() > cfg.max_patterns {
                        return Err(Error::PatternOverflow { cap: cfg.max_patterns });
                    }
                }
            }
            acc = next;
        }
        PolyhedralCone::new(PolyhedralSet::new(dim.max(1), acc)?)
    }

    /// A solution with some nonzero coordinate among `coords`.
    pub fn nonzero_in(&self, coords: &[usize], cfg: &Config) -> Result<Option<Vec<f64>>> {
        let sol = self.solutions(cfg)?;
        Ok(sol.nonzero_witness_in(coords, cfg))
    }

    /// Projection of the solution cone onto `coords`.
    pub fn project(&self, coords: &[usize], cfg: &Config) -> Result<PolyhedralCone> {
        Ok(self.solutions(cfg)?.project(coords, cfg))
    }
}
