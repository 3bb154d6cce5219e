//! Truncated conjugate gradients on the tangent space for the regularized
//! Newton subproblem grad m(u) + Hess m(u)[xi] = 0.
//!
//! CG starts from zero, stops on a relative residual, an iteration cap or
//! detected nonpositive curvature, and returns both the last iterate s and
//! the curvature direction d (zero curvature threshold 1e-10 ||p||^2).
//! Tangent drift is controlled by re-projecting the residual and search
//! direction every five iterations.

use super::dot;
use crate::error::{Error, Result};
use CgStatus::{Converged, MaxIters, NegativeCurvature};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    MaxIters,
    NegativeCurvature,
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    /// Last CG iterate (the approximate Newton direction).
    pub s: Vec<f64>,
    /// Negative-curvature direction, when one was detected.
    pub d: Option<Vec<f64>>,
    /// Rayleigh numerator <d, H d> at detection (not normalized).
    pub d_curvature: f64,
    pub iters: usize,
    pub status: CgStatus,
}

/// `apply` is the (projected) subproblem operator; `reproject` maps a
/// vector back onto the subspace CG works in (tangent space, possibly with
/// flat gauge directions removed) and is applied to the initial residual
/// and periodically to r and p to control drift.
pub fn modified_cg(
    apply: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    grad: &[f64],
    max_inner: usize,
    rel_tol: f64,
    reproject: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<CgOutcome> {
    let n = grad.len();
    let mut s = vec![0.0f64; n];
    let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut r = reproject(&neg_grad)?;
    let r0 = super::norm(&r);
    if r0 == 0.0 {
        return Ok(CgOutcome { s, d: None, d_curvature: 0.0, iters: 0, status: Converged });
    }
    let mut p = r.clone();
    let mut rs = r0 * r0;

    for it in 1..=max_inner.max(1) {
        let ap = apply(&p)?;
        let curv = dot(&p, &ap);
        let pp = dot(&p, &p);
        if !curv.is_finite() {
            return Err(Error::Numerical("CG curvature is not finite".into()));
        }
        if curv <= 1e-10 * pp {
            return Ok(CgOutcome {
                s,
                d: Some(p),
                d_curvature: curv,
                iters: it,
                status: NegativeCurvature,
            });
        }
        let alpha = rs / curv;
        for i in 0..n {
            s[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if it % 5 == 0 {
            r = reproject(&r)?;
            p = reproject(&p)?;
        }
        let rs_new = dot(&r, &r);
        if !rs_new.is_finite() {
            return Err(Error::Numerical("CG residual is not finite".into()));
        }
        if rs_new.sqrt() <= rel_tol * r0 {
            return Ok(CgOutcome { s, d: None, d_curvature: 0.0, iters: it, status: Converged });
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(CgOutcome { s, d: None, d_curvature: 0.0, iters: max_inner, status: MaxIters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn feasible_u(man: &Manifold, rng: &mut impl Rng) -> Vec<f64> {
        let w: Vec<f64> = (0..man.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        crate::retract::retract_projective(man, &w).unwrap()
    }

    #[test]
    fn identity_operator_converges_in_one_step() {
        let man = Manifold::new(1, 2, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let u = feasible_u(&man, &mut rng);
        let raw: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = man.tangent_project(&u, &raw).unwrap();
        let id = |x: &[f64]| -> crate::error::Result<Vec<f64>> { Ok(x.to_vec()) };
        let proj = |x: &[f64]| man.tangent_project(&u, x);
        let out = modified_cg(&id, &g, 30, 1e-10, &proj).unwrap();
        assert_eq!(out.status, CgStatus::Converged);
        assert_eq!(out.iters, 1);
        assert!(out.d.is_none());
        for (si, gi) in out.s.iter().zip(&g) {
            assert!((si + gi).abs() < 1e-12);
        }
    }

    #[test]
    fn spd_operator_matches_dense_solve() {
        //6-dimensional embedding (F=1, one grid point), SPD operator on the
        // tangent space realized by projecting a random SPD matrix
        let man = Manifold::new(1, 1, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let u = feasible_u(&man, &mut rng);
        let n = 6usize;
        let mut a = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-0.4..0.4);
                a[i][j] = v;
                a[j][i] = v;
            }
            a[i][i] += 3.0; // diagonally dominant -> SPD
        }
        let man2 = man;
        let apply = |x: &[f64]| -> crate::error::Result<Vec<f64>> {
            let mut y = vec![0.0; n];
            for i in 0..n {
                y[i] = (0..n).map(|j| a[i][j] * x[j]).sum();
            }
            man2.tangent_project(&u, &y)
        };
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = man2.tangent_project(&u, &raw).unwrap();
        let proj = |x: &[f64]| man2.tangent_project(&u, x);
        let out = modified_cg(&apply, &g, 50, 1e-12, &proj).unwrap();
        assert_eq!(out.status, CgStatus::Converged);
        // verify A s = -g on the tangent space
        let residual = apply(&out.s).unwrap();
        for (ri, gi) in residual.iter().zip(&g) {
            assert!((ri + gi).abs() < 1e-9, "{ri} vs {gi}");
        }
    }

    #[test]
    fn negative_curvature_detected() {
        let man = Manifold::new(1, 1, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let u = feasible_u(&man, &mut rng);
        // operator = -identity on the tangent space: immediate negative curvature
        let apply = |x: &[f64]| -> crate::error::Result<Vec<f64>> {
            Ok(x.iter().map(|v| -v).collect())
        };
        let raw: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = man.tangent_project(&u, &raw).unwrap();
        let proj = |x: &[f64]| man.tangent_project(&u, x);
        let out = modified_cg(&apply, &g, 30, 1e-10, &proj).unwrap();
        assert_eq!(out.status, CgStatus::NegativeCurvature);
        let d = out.d.unwrap();
        assert!(out.d_curvature < 0.0);
        // first iteration: s still zero, d = -g
        assert!(out.s.iter().all(|v| *v == 0.0));
        for (di, gi) in d.iter().zip(&g) {
            assert!((di + gi).abs() < 1e-14);
        }
    }
}
