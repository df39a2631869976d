//! Regularity analysis for structured set-valued mappings.
//!
//! The crate computes least-singular-value (LSV) functions of coderivatives and
//! uses them to decide metric regularity, metric 2-regularity and Gfrerer
//! regularity. Sets, cones and mapping graphs are finite unions of convex
//! polyhedra; smooth parts are polynomial maps with exact derivatives.
//!
//! Layers, bottom up:
//! - [`polyhedra`]: H-representation polyhedra, cones, LP/QP kernels.
//! - [`smoothmaps`]: polynomial maps, Jacobians and their semiderivatives.
//! - [`setmaps`]: structured set-valued mappings and positively homogeneous maps.
//! - [`gendiff`]: graphical derivatives, coderivatives and their calculus.
//! - [`lsv`]: LSV values, outer norms, singularity reports, subderivative bounds.
//! - [`regularity`]: checkers and verdicts.
//! - [`systems`]: constraint systems and variational (KKT) systems.
//! - [`cli`]: problem files, reports and the fixture corpus.

pub mod cli;
pub mod error;
pub mod gendiff;
pub mod linalg;
pub mod lsv;
pub mod polyhedra;
pub mod regularity;
pub mod setmaps;
pub mod smoothmaps;
pub mod systems;

pub use error::{Error, Result};

/// Numeric tolerances and search settings shared by every analysis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Config {
    /// Membership and constraint activity: `|a·x - b| <= tol_mem (1 + |b|)`.
    pub tol_mem: f64,
    /// Phase-one residual accepted as LP feasibility.
    pub tol_lp: f64,
    /// Set-equality certificates.
    pub tol_eq: f64,
    /// LSV values at or below this count as zero in numeric comparisons.
    pub tol_lsv: f64,
    /// Cap on active-set patterns in limiting normal cone enumeration.
    pub max_patterns: usize,
    pub seed: u64,
    /// Forces the sampled sphere search instead of the exact face enumeration.
    pub numeric_only: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol_mem: 1e-9,
            tol_lp: 1e-9,
            tol_eq: 1e-7,
            tol_lsv: 1e-8,
            max_patterns: 4096,
            seed: 0x5eed,
            numeric_only: false,
        }
    }
}
