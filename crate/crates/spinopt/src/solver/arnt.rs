//! Adaptive regularized Newton iteration. Each outer step minimizes the
//! quadratic model
//!   m_k(u) = <g_k, u - u_k> + 1/2 <H_k (u - u_k), u - u_k>
//!            + sigma_k / 2 ||u - u_k||^2
//! over the manifold: truncated CG solves the tangent Newton system,
//! a monotone Armijo search on the model picks the trial point, and a
//! trust-region-style ratio test accepts it and rescales sigma_hat
//! (sigma_k = sigma_hat_k ||grad E(u_k)||). Detected negative curvature
//! both augments the search direction and floors the next sigma at the
//! estimated curvature magnitude plus a small margin.

use super::{dot, inner_cap, modified_cg, norm, IterRecord, Phase, PhaseOutcome, SolverConfig};
use crate::error::{Error, Result, StateCapsule};
use crate::problem::Problem;
use crate::retract::Retraction;

const MAX_HALVINGS: usize = 40;
const SIGMA_HAT_CEIL: f64 = 1e16;

#[allow(clippy::too_many_arguments)]
pub fn arnt(
    problem: &Problem,
    u0: &[f64],
    tol: f64,
    max_outer: usize,
    retraction: Retraction,
    cfg: &SolverConfig,
    level: usize,
    callback: &mut dyn FnMut(&IterRecord),
) -> Result<PhaseOutcome> {
    let man = &problem.manifold;
    let mut u = u0.to_vec();
    let (mut e, mut g_eu) = problem.energy_and_grad(&u)?;
    let mut sigma_hat = cfg.sigma0;
    let mut sigma_floor: Option<f64> = None;
    let mut iters = 0usize;

    while iters < max_outer {
        let grad = man.riemannian_gradient(&u, &g_eu)?;
        let gnorm = norm(&grad);
        if gnorm <= tol {
            return Ok(PhaseOutcome { u, energy: e, grad_norm: gnorm, iters, converged: true });
        }
        if !gnorm.is_finite() {
            return Err(Error::Numerical("ARNT gradient is not finite".into()));
        }

        let mut sigma = sigma_hat * gnorm;
        if let Some(floor) = sigma_floor.take() {
            sigma = sigma.max(floor);
        }

        let ctx = problem.hess_context(&u);
        // the two U(1) gauge generators span exactly flat directions; the
        // subproblem is solved on their orthogonal complement so that a
        // vanishing sigma cannot amplify rounding noise along them
        let gauge = man.gauge_basis(&u);
        let deflate = |v: &mut Vec<f64>| {
            for q in &gauge {
                let c = dot(v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        };
        let reproject = |v: &[f64]| -> Result<Vec<f64>> {
            let mut t = man.tangent_project(&u, v)?;
            deflate(&mut t);
            Ok(t)
        };
        let hess_op = |xi: &[f64]| -> Result<Vec<f64>> {
            let mut he = problem.euclid_hessvec(&ctx, xi);
            for (h, x) in he.iter_mut().zip(xi) {
                *h += sigma * x;
            }
            let mut out = man.riemannian_hessvec(&u, xi, &g_eu, &he)?;
            deflate(&mut out);
            Ok(out)
        };
        let cap = inner_cap(gnorm, man.dim().saturating_sub(2));
        let rel_tol = 0.1f64.min(0.1 * gnorm);
        let cg = modified_cg(&hess_op, &grad, cap, rel_tol, &reproject)?;

        let mut xi = cg.s.clone();
        if let Some(d) = &cg.d {
            let tau = dot(d, &grad) / cg.d_curvature;
            for (x, dv) in xi.iter_mut().zip(d) {
                *x += tau * dv;
            }
            let dd = dot(d, d);
            if dd > 0.0 {
                sigma_floor = Some(cg.d_curvature.abs() / dd + cfg.neg_curv_margin);
            }
        }
        let mut gxi = dot(&grad, &xi);
        if !(gxi < 0.0) {
            // provably a descent direction; reachable only through rounding
            xi = grad.iter().map(|g| -g).collect();
            gxi = -gnorm * gnorm;
        }

        // model value at an ambient point z
        let model = |z: &[f64]| -> f64 {
            let dz: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
            let hdz = problem.euclid_hessvec(&ctx, &dz);
            dot(&g_eu, &dz) + 0.5 * dot(&hdz, &dz) + 0.5 * sigma * dot(&dz, &dz)
        };

        // monotone Armijo search on the model
        let mut trial = None;
        for halving in 0..=MAX_HALVINGS {
            let alpha = cfg.alpha0 * cfg.armijo_delta.powi(halving as i32);
            let w: Vec<f64> = u.iter().zip(&xi).map(|(a, x)| a + alpha * x).collect();
            let z = match retraction.apply(man, &w) {
                Ok(z) => z,
                Err(Error::StepTooLarge) | Err(Error::OutsideDomain(_)) => continue,
                Err(err) => return Err(err),
            };
            let mz = model(&z);
            if !mz.is_finite() {
                return Err(Error::Numerical("model evaluation is not finite".into()));
            }
            if mz <= cfg.armijo_rho * alpha * gxi {
                trial = Some((z, mz, alpha));
                break;
            }
        }

        iters += 1;
        let (accepted, step, energy_after) = match trial {
            None => {
                // model search exhausted: grow the regularization and retry
                sigma_hat *= cfg.gamma2;
                (false, 0.0, e)
            }
            Some((z, mz, alpha)) => {
                let ez = problem.energy(&z)?;
                // when the model decrease sits below the rounding floor of
                // the energy sum, the measured ratio is pure noise; such a
                // step cannot hurt at double precision, so accept it
                let noise_floor = 1e3 * f64::EPSILON * e.abs().max(1.0);
                let ratio = if !(mz < 0.0) {
                    f64::NEG_INFINITY
                } else if mz.abs() <= noise_floor {
                    1.0
                } else {
                    (ez - e) / mz
                };
                if ratio >= cfg.eta1 {
                    u = z;
                    let pair = problem.energy_and_grad(&u)?;
                    e = pair.0;
                    g_eu = pair.1;
                    sigma_hat *= if ratio >= cfg.eta2 { cfg.gamma0 } else { cfg.gamma1 };
                    (true, alpha, e)
                } else {
                    sigma_hat *= cfg.gamma2;
                    (false, alpha, e)
                }
            }
        };
        if sigma_hat > SIGMA_HAT_CEIL {
            return Err(Error::Stagnation { grad_norm: gnorm, best: StateCapsule(u) });
        }

        callback(&IterRecord {
            iter: iters - 1,
            level,
            phase: Phase::Arnt,
            energy: energy_after,
            grad_norm: gnorm,
            sigma,
            step,
            accepted,
            inner_iters: cg.iters,
        });
    }

    let grad = man.riemannian_gradient(&u, &g_eu)?;
    let gnorm = norm(&grad);
    Ok(PhaseOutcome { u, energy: e, grad_norm: gnorm, iters, converged: gnorm <= tol })
}
