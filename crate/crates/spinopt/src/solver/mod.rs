//! Optimization engines: the Riemannian gradient method with BB steps
//! (warm start), the modified CG subproblem solver, the adaptive
//! regularized Newton outer loop, and the cascadic multigrid driver.

mod arnt;
mod cascade;
mod cg;
mod rgbb;

pub use arnt::arnt;
pub use cascade::{cascadic_solve, feasible_levels};
pub use cg::{modified_cg, CgOutcome, CgStatus};
pub use rgbb::rgbb;

/// Validate that the configured level count fits the axes (see
/// [`cascadic_solve`] for the actual schedule).
pub fn plan_levels_check(
    spec: &crate::problem::ProblemSpec,
    cfg: &SolverConfig,
) -> crate::error::Result<()> {
    cascade::plan_levels(spec, cfg).map(|_| ())
}

use crate::error::{Error, Result};
use crate::retract::Retraction;
use std::time::Duration;

/// All tolerances and algorithmic parameters of a solve.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Gradient-norm stopping tolerance on the finest mesh.
    pub grad_tol: f64,
    /// Gradient-norm tolerance on coarse meshes.
    pub grad_tol_coarse: f64,
    /// Outer iteration cap for both phases.
    pub max_outer: usize,
    /// RGBB warm-start tolerance inside the Newton driver.
    pub rgbb_warm_tol: f64,
    pub rgbb_warm_max_iters: usize,
    /// Ratio-test thresholds and regularization update factors.
    pub eta1: f64,
    pub eta2: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Initial scale-free regularization sigma_hat.
    pub sigma0: f64,
    /// Armijo constants and the nonmonotone averaging weight.
    pub armijo_rho: f64,
    pub armijo_delta: f64,
    pub alpha0: f64,
    pub nonmono: f64,
    /// Margin added to the negative-curvature estimate when resetting sigma.
    pub neg_curv_margin: f64,
    pub retraction: Retraction,
    /// Number of multigrid levels (1 = single grid).
    pub levels: usize,
    /// Smallest admissible per-axis point count on the coarsest level.
    pub coarsest_min_n: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tol: 1e-6,
            grad_tol_coarse: 1e-5,
            max_outer: 10000,
            rgbb_warm_tol: 1e-2,
            rgbb_warm_max_iters: 2000,
            eta1: 0.01,
            eta2: 0.9,
            gamma0: 0.2,
            gamma1: 1.0,
            gamma2: 10.0,
            sigma0: 1.0,
            armijo_rho: 1e-4,
            armijo_delta: 0.5,
            alpha0: 1.0,
            nonmono: 0.85,
            neg_curv_margin: 1e-4,
            retraction: Retraction::Projective,
            levels: 3,
            coarsest_min_n: 16,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return Err(Error::Config(format!(
                "need 0 < eta1 <= eta2 < 1, got {} and {}",
                self.eta1, self.eta2
            )));
        }
        // gamma1 = 1 (keep sigma on weakly accepted steps) is admissible
        if !(0.0 < self.gamma0 && self.gamma0 < 1.0 && 1.0 <= self.gamma1 && self.gamma1 <= self.gamma2)
        {
            return Err(Error::Config(format!(
                "need 0 < gamma0 < 1 <= gamma1 <= gamma2, got {}, {}, {}",
                self.gamma0, self.gamma1, self.gamma2
            )));
        }
        for (name, v) in [
            ("armijo_rho", self.armijo_rho),
            ("armijo_delta", self.armijo_delta),
            ("nonmono", self.nonmono),
        ] {
            if !(0.0 < v && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(0.0 < self.alpha0 && self.alpha0 <= 1.0) {
            return Err(Error::Config(format!("alpha0 must lie in (0, 1], got {}", self.alpha0)));
        }
        if self.sigma0 <= 0.0 {
            return Err(Error::Config("sigma0 must be positive".into()));
        }
        if self.levels == 0 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("grad_tol_coarse", self.grad_tol_coarse),
            ("rgbb_warm_tol", self.rgbb_warm_tol),
            ("neg_curv_margin", self.neg_curv_margin),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which optimization phase produced a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Rgbb,
    Arnt,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Rgbb => "rgbb",
            Phase::Arnt => "arnt",
        }
    }
}

/// One per-iteration progress record, streamed to the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub level: usize,
    pub phase: Phase,
    pub energy: f64,
    pub grad_norm: f64,
    pub sigma: f64,
    pub step: f64,
    pub accepted: bool,
    pub inner_iters: usize,
}

/// Outcome of one optimization phase on one grid level.
#[derive(Clone, Debug)]
pub struct PhaseOutcome {
    pub u: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Per-level totals in the style of the usual iteration tables:
/// outer counts with the average number of inner CG iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub n: Vec<usize>,
    pub rgbb_iters: usize,
    pub arnt_iters: usize,
    pub total_inner: usize,
    pub final_energy: f64,
    pub final_grad_norm: f64,
}

impl LevelSummary {
    pub fn avg_inner(&self) -> f64 {
        if self.arnt_iters == 0 {
            0.0
        } else {
            self.total_inner as f64 / self.arnt_iters as f64
        }
    }
}

/// Full account of a cascadic solve.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub records: Vec<IterRecord>,
    pub levels: Vec<LevelSummary>,
    pub final_energy: f64,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub wall_time: Duration,
    pub notes: Vec<String>,
}

impl Default for LevelSummary {
    fn default() -> Self {
        LevelSummary {
            level: 0,
            n: Vec::new(),
            rgbb_iters: 0,
            arnt_iters: 0,
            total_inner: 0,
            final_energy: f64::NAN,
            final_grad_norm: f64::NAN,
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Inner CG iteration cap, adaptive in the gradient norm: 20 iterations
/// while the gradient is large, growing linearly per decade to 200 at
/// gradient norms of 1e-6 and below, never exceeding the tangent dimension.
pub(crate) fn inner_cap(grad_norm: f64, tangent_dim: usize) -> usize {
    let decades = (1.0 / grad_norm.max(f64::MIN_POSITIVE)).log10().clamp(1.0, 6.0);
    let cap = (20.0 + 36.0 * (decades - 1.0)).ceil() as usize;
    cap.clamp(10, 200).min(tangent_dim.max(2))
}
