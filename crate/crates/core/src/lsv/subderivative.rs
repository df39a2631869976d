//! Sampled estimate of `dφ(ξ̄)(ω) = liminf_{τ↓0, ω′→ω} (φ(ξ̄ + τω′) − φ(ξ̄))/τ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::Config;

pub const SUBDERIVATIVE_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const BALL_SAMPLES: usize = 16;
const BLOWUP: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubderivativeEstimate {
    pub value: f64,
    pub dispersion: f64,
    /// Minimum quotient per schedule level.
    pub levels: Vec<f64>,
}

/// Per level `τ`, the smallest quotient over `ω` and random `ω′ ∈ ω + τ(1+‖ω‖)𝔹`.
///
/// With `project`, sample points `ξ̄ + τω′` are first mapped into the domain; a
/// projected direction is kept when it stays within `√τ (1+‖ω‖)` of `ω`.
pub fn subderivative_estimate(
    phi: &dyn Fn(&[f64]) -> Result<f64>,
    xi_bar: &[f64],
    omega: &[f64],
    schedule: &[f64],
    project: Option<&dyn Fn(&[f64]) -> Option<Vec<f64>>>,
    cfg: &Config,
) -> Result<SubderivativeEstimate> {
    check_dim("subderivative direction", xi_bar.len(), omega.len())?;
    if schedule.is_empty() || schedule.windows(2).any(|p| p[1] >= p[0]) || schedule.iter().any(|t| *t <= 0.0) {
        return Err(Error::Validation("schedule must be positive and strictly decreasing".into()));
    }
    let f0 = phi(xi_bar)?;
    if !f0.is_finite() {
        return Err(Error::Validation("φ(ξ̄) must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = 1.0 + linalg::norm(omega);
    let mut levels = Vec::with_capacity(schedule.len());
    for &tau in schedule {
        let mut best = f64::INFINITY;
        for k in 0..=BALL_SAMPLES {
            let w = if k == 0 {
                omega.to_vec()
            } else {
                let u = linalg::random_unit(&mut rng, omega.len());
                let r: f64 = rand::Rng::gen_range(&mut rng, 0.0..1.0);
                linalg::axpy(omega, tau * scale * r, &u)
            };
            let mut point = linalg::axpy(xi_bar, tau, &w);
            if let Some(proj) = project {
                let Some(p) = proj(&point) else { continue };
                let w2 = linalg::scale(&linalg::sub(&p, xi_bar), 1.0 / tau);
                if linalg::norm(&linalg::sub(&w2, omega)) > tau.sqrt() * scale {
                    continue;
                }
                point = p;
            }
            let q = (phi(&point)? - f0) / tau;
            if q < best {
                best = q;
            }
        }
        levels.push(best);
    }
    if levels.iter().all(|v| v.is_infinite()) {
        return Ok(SubderivativeEstimate { value: f64::INFINITY, dispersion: 0.0, levels });
    }
    let tail = &levels[levels.len().saturating_sub(3)..];
    let last = *tail.last().unwrap();
    let blowup = tail.len() == 3 && tail.windows(2).all(|p| p[1] >= BLOWUP * p[0].max(f64::MIN_POSITIVE)) && last > 1e2;
    if blowup || last == f64::INFINITY {
        return Ok(SubderivativeEstimate { value: f64::INFINITY, dispersion: 0.0, levels });
    }
    let dispersion = tail.iter().map(|v| (v - last).abs()).fold(0.0, f64::max);
    if !(dispersion <= 0.1 * (1.0 + last.abs())) {
        return Err(Error::NonConvergent(format!("subderivative tail dispersion {dispersion:.3e}")));
    }
    Ok(SubderivativeEstimate { value: last, dispersion, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_at_zero() {
        let phi = |x: &[f64]| Ok(x[0].abs());
        let e = subderivative_estimate(&phi, &[0.0], &[1.0], &SUBDERIVATIVE_SCHEDULE, None, &Config::default()).unwrap();
        // the ball shrinks with τ, so the minimum quotient tends to 1
        assert!((e.value - 1.0).abs() < 1e-5, "{e:?}");
    }

    #[test]
    fn sqrt_blows_up() {
        let phi = |x: &[f64]| Ok(x[0].abs().sqrt());
        let e = subderivative_estimate(&phi, &[0.0], &[1.0], &SUBDERIVATIVE_SCHEDULE, None, &Config::default()).unwrap();
        assert!(e.value.is_infinite());
    }

    #[test]
    fn projection_onto_parabola() {
        // φ(u, y) = |u| on y = u², ∞ elsewhere; direction (1, 0) is tangent
        let phi = |x: &[f64]| Ok(if (x[1] - x[0] * x[0]).abs() < 1e-12 { x[0].abs() } else { f64::INFINITY });
        let proj = |p: &[f64]| Some(vec![p[0], p[0] * p[0]]);
        let e = subderivative_estimate(&phi, &[0.0, 0.0], &[1.0, 0.0], &SUBDERIVATIVE_SCHEDULE, Some(&proj), &Config::default())
            .unwrap();
        assert!((e.value - 1.0).abs() < 1e-5, "{e:?}");
    }
}
