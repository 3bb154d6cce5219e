//! Riemannian gradient descent with Barzilai-Borwein steps and a
//! nonmonotone Armijo curvilinear search along eta = -grad E(u).
//!
//! The BB step is gamma_k = |<s, v>| / <v, v> with s = u_k - u_{k-1} and
//! v = grad(u_k) - grad(u_{k-1}); the first iteration falls back to
//! 1e-2 / max(1, ||grad||). The nonmonotone reference value follows
//! C_{k+1} = (rho_m Q_k C_k + E(u_{k+1})) / Q_{k+1}, Q_{k+1} = rho_m Q_k + 1.

use super::{dot, norm, IterRecord, Phase, PhaseOutcome, SolverConfig};
use crate::error::{Error, Result, StateCapsule};
use crate::problem::Problem;
use crate::retract::Retraction;

const MAX_HALVINGS: usize = 40;
const BB_CLAMP: (f64, f64) = (1e-12, 1e12);

#[allow(clippy::too_many_arguments)]
pub fn rgbb(
    problem: &Problem,
    u0: &[f64],
    tol: f64,
    max_iters: usize,
    retraction: Retraction,
    cfg: &SolverConfig,
    level: usize,
    callback: &mut dyn FnMut(&IterRecord),
) -> Result<PhaseOutcome> {
    let man = &problem.manifold;
    let mut u = u0.to_vec();
    let (mut e, mut g_eu) = problem.energy_and_grad(&u)?;
    let mut grad = man.riemannian_gradient(&u, &g_eu)?;
    let mut gnorm = norm(&grad);

    let mut c_ref = e;
    let mut q_ref = 1.0f64;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (u_{k-1}, grad_{k-1})

    let mut iters = 0usize;
    while iters < max_iters {
        if gnorm <= tol {
            return Ok(PhaseOutcome { u, energy: e, grad_norm: gnorm, iters, converged: true });
        }
        if !gnorm.is_finite() {
            return Err(Error::Numerical("RGBB gradient is not finite".into()));
        }

        let gamma = match &prev {
            Some((u_prev, g_prev)) => {
                let s: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
                let v: Vec<f64> = grad.iter().zip(g_prev).map(|(a, b)| a - b).collect();
                let vv = dot(&v, &v);
                if vv > 0.0 && vv.is_finite() {
                    (dot(&s, &v).abs() / vv).clamp(BB_CLAMP.0, BB_CLAMP.1)
                } else {
                    1e-2 / gnorm.max(1.0)
                }
            }
            None => 1e-2 / gnorm.max(1.0),
        };

        let slope = -gnorm * gnorm; // <grad, eta> with eta = -grad
        let mut found = None;
        let mut alpha = gamma;
        for halving in 0..=MAX_HALVINGS {
            alpha = gamma * cfg.armijo_delta.powi(halving as i32);
            let w: Vec<f64> = u.iter().zip(&grad).map(|(a, g)| a - alpha * g).collect();
            let z = match retraction.apply(man, &w) {
                Ok(z) => z,
                Err(Error::StepTooLarge) | Err(Error::OutsideDomain(_)) => continue,
                Err(err) => return Err(err),
            };
            match problem.energy(&z) {
                Ok(ez) if ez <= c_ref + cfg.armijo_rho * alpha * slope => {
                    found = Some((z, ez, halving));
                    break;
                }
                Ok(_) => continue,
                Err(Error::Numerical(_)) => continue,
                Err(err) => return Err(err),
            }
        }
        let Some((z, ez, halvings)) = found else {
            return Err(Error::Stagnation { grad_norm: gnorm, best: StateCapsule(u) });
        };

        q_ref = cfg.nonmono * q_ref + 1.0;
        c_ref = ((q_ref - 1.0) * c_ref + ez) / q_ref;

        prev = Some((std::mem::take(&mut u), std::mem::take(&mut grad)));
        u = z;
        e = ez;
        g_eu = problem.energy_and_grad(&u)?.1;
        grad = man.riemannian_gradient(&u, &g_eu)?;
        gnorm = norm(&grad);
        iters += 1;

        callback(&IterRecord {
            iter: iters - 1,
            level,
            phase: Phase::Rgbb,
            energy: e,
            grad_norm: gnorm,
            sigma: 0.0,
            step: alpha,
            accepted: true,
            inner_iters: halvings,
        });
    }
    Ok(PhaseOutcome { u, energy: e, grad_norm: gnorm, iters, converged: gnorm <= tol })
}
