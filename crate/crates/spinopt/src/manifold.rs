//! The constraint manifold M = { u : u'u = 1, u'Gamma u = M } in the real
//! embedding R^N, N = 2*(grid points)*(2F+1).
//!
//! The complex state X maps to u = (u_F; ...; u_-F) where each block
//! u_l = (Re X_l; Im X_l) has length 2n, and Gamma weights block l by l.
//! Tangent vectors satisfy u' xi = 0 and u' Gamma xi = 0; the projection,
//! Riemannian gradient and Riemannian Hessian-vector product below follow
//! the closed forms that the rank-2 constraint Jacobian admits.

use crate::energy::StateField;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Degeneracy guard for the projection denominator u'Gamma^2 u - M^2.
const DEGENERACY_EPS: f64 = 1e-14;

/// Embedding geometry: spin F, number of grid points, and the target
/// magnetization M (|M| < F).
#[derive(Clone, Copy, Debug)]
pub struct Manifold {
    pub f: u32,
    pub npts: usize,
    pub mag: f64,
}

impl Manifold {
    pub fn new(f: u32, npts: usize, mag: f64) -> Result<Self> {
        if !(1..=3).contains(&f) {
            return Err(Error::Config(format!("unsupported spin F = {f}")));
        }
        if mag.abs() >= f as f64 {
            return Err(Error::Config(format!("|M| = {} must be < F = {f}", mag.abs())));
        }
        Ok(Manifold { f, npts, mag })
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        (2 * self.f + 1) as usize
    }

    /// Real dimension N of the ambient space.
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.npts * self.ncomp()
    }

    /// Block length 2n.
    #[inline]
    pub fn block_len(&self) -> usize {
        2 * self.npts
    }

    /// Gamma weight of block b (component l = F - b).
    #[inline]
    pub fn weight(&self, b: usize) -> f64 {
        self.f as f64 - b as f64
    }

    pub fn block<'a>(&self, u: &'a [f64], b: usize) -> &'a [f64] {
        let len = self.block_len();
        &u[b * len..(b + 1) * len]
    }

    /// Real embedding of a complex state: per component, Re then Im.
    pub fn embed(&self, x: &StateField) -> Vec<f64> {
        debug_assert_eq!(x.npts, self.npts);
        debug_assert_eq!(x.ncomp, self.ncomp());
        let n = self.npts;
        let mut u = vec![0.0f64; self.dim()];
        for b in 0..x.ncomp {
            let src = x.component(b);
            let dst = &mut u[b * 2 * n..(b + 1) * 2 * n];
            for (j, z) in src.iter().enumerate() {
                dst[j] = z.re;
                dst[n + j] = z.im;
            }
        }
        u
    }

    /// Inverse of [`embed`](Self::embed); lossless.
    pub fn unembed(&self, u: &[f64]) -> StateField {
        debug_assert_eq!(u.len(), self.dim());
        let n = self.npts;
        let mut x = StateField::zeros(n, self.ncomp());
        for b in 0..self.ncomp() {
            let src = &u[b * 2 * n..(b + 1) * 2 * n];
            let dst = x.component_mut(b);
            for j in 0..n {
                dst[j] = Complex64::new(src[j], src[n + j]);
            }
        }
        x
    }

    /// u' Gamma^k v for k = 0, 1, 2 in one pass.
    fn weighted_dots(&self, u: &[f64], v: &[f64]) -> (f64, f64, f64) {
        let len = self.block_len();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for b in 0..self.ncomp() {
            let w = self.weight(b);
            let mut s = 0.0;
            let ub = &u[b * len..(b + 1) * len];
            let vb = &v[b * len..(b + 1) * len];
            for (a, c) in ub.iter().zip(vb) {
                s += a * c;
            }
            d0 += s;
            d1 += w * s;
            d2 += w * w * s;
        }
        (d0, d1, d2)
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn gamma_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weighted_dots(u, v).1
    }

    pub fn gamma2_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weighted_dots(u, v).2
    }

    /// Gamma u (block-diagonal scaling by l).
    pub fn apply_gamma(&self, u: &[f64]) -> Vec<f64> {
        let len = self.block_len();
        let mut out = vec![0.0f64; u.len()];
        for b in 0..self.ncomp() {
            let w = self.weight(b);
            for i in b * len..(b + 1) * len {
                out[i] = w * u[i];
            }
        }
        out
    }

    /// Squared block norms ||w_l||^2, ordered l = F..-F.
    pub fn block_norms_sq(&self, w: &[f64]) -> Vec<f64> {
        let len = self.block_len();
        (0..self.ncomp())
            .map(|b| w[b * len..(b + 1) * len].iter().map(|x| x * x).sum())
            .collect()
    }

    /// (u'u - 1, u'Gamma u - M).
    pub fn constraint_residuals(&self, u: &[f64]) -> (f64, f64) {
        let (d0, d1, _) = self.weighted_dots(u, u);
        (d0 - 1.0, d1 - self.mag)
    }

    pub fn is_feasible(&self, u: &[f64], tol: f64) -> bool {
        let (r0, r1) = self.constraint_residuals(u);
        r0.abs() <= tol && r1.abs() <= tol
    }

    /// Orthogonal projection of w onto the tangent space at a feasible u:
    /// P_u w = w - alpha_w u - beta_w Gamma u with (alpha_w, beta_w) from the
    /// 2x2 system [[1, M], [M, u'G^2 u]] [alpha; beta] = [u'w; u'Gw].
    pub fn tangent_project(&self, u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let (alpha, beta) = self.projection_coefficients(u, w)?;
        let len = self.block_len();
        let mut out = w.to_vec();
        for b in 0..self.ncomp() {
            let gw = self.weight(b);
            for i in b * len..(b + 1) * len {
                out[i] -= (alpha + beta * gw) * u[i];
            }
        }
        Ok(out)
    }

    fn projection_coefficients(&self, u: &[f64], w: &[f64]) -> Result<(f64, f64)> {
        let g2 = self.gamma2_dot(u, u);
        let m = self.mag;
        let denom = g2 - m * m;
        if denom <= DEGENERACY_EPS {
            return Err(Error::Degenerate(format!(
                "u'Gamma^2 u - M^2 = {denom:.3e} is not positive"
            )));
        }
        let (uw, ugw, _) = self.weighted_dots(u, w);
        let alpha = (g2 * uw - m * ugw) / denom;
        let beta = (ugw - m * uw) / denom;
        Ok((alpha, beta))
    }

    /// grad f(u) = P_u g for the Euclidean gradient g.
    pub fn riemannian_gradient(&self, u: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.tangent_project(u, g)
    }

    /// Orthonormal basis of the flat gauge directions at u: the generators
    /// of the global phase rotation e^{i theta} X and the per-component
    /// rotation e^{i theta l} X (both leave the energy and the constraints
    /// invariant). The Hessian is exactly singular along them, so Newton
    /// subproblems remove (deflate) this span.
    pub fn gauge_basis(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let n = self.npts;
        let len = self.block_len();
        let apply_j = |weighted: bool| -> Vec<f64> {
            let mut g = vec![0.0f64; u.len()];
            for b in 0..self.ncomp() {
                let w = if weighted { self.weight(b) } else { 1.0 };
                let (re, im) = (b * len, b * len + n);
                for j in 0..n {
                    g[re + j] = -w * u[im + j];
                    g[im + j] = w * u[re + j];
                }
            }
            g
        };
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2);
        for weighted in [false, true] {
            let mut g = apply_j(weighted);
            for q in &basis {
                let c = self.dot(&g, q);
                for (gi, qi) in g.iter_mut().zip(q) {
                    *gi -= c * qi;
                }
            }
            let nrm = self.dot(&g, &g).sqrt();
            if nrm > 1e-12 {
                for gi in g.iter_mut() {
                    *gi /= nrm;
                }
                basis.push(g);
            }
        }
        basis
    }

    /// Riemannian Hessian-vector product at a feasible u:
    /// Hess f(u)[xi] = P_u(h_e - alpha_g xi - beta_g Gamma xi) where
    /// h_e = H(u) xi and (alpha_g, beta_g) are the projection coefficients
    /// of the Euclidean gradient g.
    pub fn riemannian_hessvec(
        &self,
        u: &[f64],
        xi: &[f64],
        g: &[f64],
        h_e: &[f64],
    ) -> Result<Vec<f64>> {
        let g2 = self.gamma2_dot(u, u);
        let m = self.mag;
        let alpha_u = g2 - m * m;
        if alpha_u <= DEGENERACY_EPS {
            return Err(Error::Degenerate(format!(
                "u'Gamma^2 u - M^2 = {alpha_u:.3e} is not positive"
            )));
        }
        let (ug, ugg, _) = self.weighted_dots(u, g);
        let alpha_g = (1.0 + m * m / alpha_u) * ug - (m / alpha_u) * ugg;
        let beta_g = -(m / alpha_u) * ug + ugg / alpha_u;

        let (uh, ugh, _) = self.weighted_dots(u, h_e);
        let (_, _, ug2xi) = self.weighted_dots(u, xi);
        let beta_u = ugh - beta_g * ug2xi;

        let coef_u = (g2 * uh - m * beta_u) / alpha_u;
        let coef_gu = (m * uh - beta_u) / alpha_u;

        let len = self.block_len();
        let mut out = vec![0.0f64; u.len()];
        for b in 0..self.ncomp() {
            let w = self.weight(b);
            for i in b * len..(b + 1) * len {
                out[i] = h_e[i] - alpha_g * xi[i] - beta_g * w * xi[i] - coef_u * u[i]
                    + coef_gu * w * u[i];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Random feasible point built by the 2x2-system projection (oracle-free).
    pub(crate) fn random_feasible(man: &Manifold, rng: &mut impl Rng) -> Vec<f64> {
        loop {
            let mut u = rand_vec(rng, man.dim());
            // crude feasibility: scale blocks to satisfy both constraints via
            // the closed-form retraction-like weights, then verify
            let s = man.block_norms_sq(&u);
            let tot: f64 = s.iter().sum();
            if tot < 1e-3 {
                continue;
            }
            let (a, bq, c) = {
                let mut a = 0.0;
                let mut b = 0.0;
                for (bi, sl) in s.iter().enumerate() {
                    let w = man.weight(bi);
                    a += w * w * sl;
                    b += w * sl;
                }
                (a, b, tot)
            };
            let m = man.mag;
            let d = c * a - bq * bq;
            if d <= 1e-9 {
                continue;
            }
            let mut ok = true;
            let len = man.block_len();
            for bi in 0..man.ncomp() {
                let l = man.weight(bi);
                let num = a - (m + l) * bq + m * l * c;
                if num <= 1e-9 {
                    ok = false;
                    break;
                }
                let sc = (num / d).sqrt();
                for v in u[bi * len..(bi + 1) * len].iter_mut() {
                    *v *= sc;
                }
            }
            if !ok {
                continue;
            }
            let (r0, r1) = man.constraint_residuals(&u);
            if r0.abs() < 1e-12 && r1.abs() < 1e-12 {
                return u;
            }
        }
    }

    #[test]
    fn embed_round_trip_and_weights() {
        let man = Manifold::new(2, 6, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut x = StateField::zeros(6, 5);
        for v in x.data.iter_mut() {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let u = man.embed(&x);
        let x2 = man.unembed(&u);
        assert_eq!(x.data, x2.data); // bit-exact

        // norms correspond
        assert!((man.dot(&u, &u) - x.mass()).abs() < 1e-14);
        assert!((man.gamma_dot(&u, &u) - x.magnetization(2)).abs() < 1e-13);

        // only l = F occupied -> u'Gu = F u'u
        let mut top = StateField::zeros(6, 5);
        for v in top.component_mut(0).iter_mut() {
            *v = Complex64::new(0.4, -0.2);
        }
        let ut = man.embed(&top);
        assert!((man.gamma_dot(&ut, &ut) - 2.0 * man.dot(&ut, &ut)).abs() < 1e-14);
    }

    #[test]
    fn unit_mass_state_embeds_to_unit_vector() {
        let man = Manifold::new(1, 4, 0.0).unwrap();
        let mut x = StateField::zeros(4, 3);
        for v in x.component_mut(1).iter_mut() {
            *v = Complex64::new(0.5, 0.0);
        }
        let u = man.embed(&x);
        assert!((man.dot(&u, &u) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn residuals_scale_quadratically() {
        let man = Manifold::new(1, 8, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let u = random_feasible(&man, &mut rng);
        let (r0, r1) = man.constraint_residuals(&u);
        assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);

        let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        let (s0, s1) = man.constraint_residuals(&u2);
        assert!((s0 - 3.0).abs() < 1e-12);
        assert!((s1 - 3.0 * man.mag).abs() < 1e-12);
    }

    #[test]
    fn residuals_match_direct_arithmetic() {
        let man = Manifold::new(3, 5, 1.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let u = rand_vec(&mut rng, man.dim());
        let (r0, r1) = man.constraint_residuals(&u);
        let d0: f64 = u.iter().map(|v| v * v).sum();
        let mut d1 = 0.0;
        for b in 0..man.ncomp() {
            let w = man.weight(b);
            d1 += w * man.block(&u, b).iter().map(|v| v * v).sum::<f64>();
        }
        assert!((r0 - (d0 - 1.0)).abs() < 1e-13);
        assert!((r1 - (d1 - man.mag)).abs() < 1e-13);
    }

    #[test]
    fn projection_annihilates_u_and_fixes_tangents() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for f in 1..=3u32 {
            let man = Manifold::new(f, 4, 0.3 * f as f64).unwrap();
            let u = random_feasible(&man, &mut rng);
            let pu = man.tangent_project(&u, &u).unwrap();
            assert!(pu.iter().all(|v| v.abs() < 1e-13));

            let w = rand_vec(&mut rng, man.dim());
            let t = man.tangent_project(&u, &w).unwrap();
            // tangency
            assert!(man.dot(&u, &t).abs() < 1e-12);
            assert!(man.gamma_dot(&u, &t).abs() < 1e-12);
            // idempotence
            let t2 = man.tangent_project(&u, &t).unwrap();
            let diff: f64 = t.iter().zip(&t2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-13);
            // w - P w in span{u, Gamma u}: orthogonal to every tangent vector
            let r: Vec<f64> = w.iter().zip(&t).map(|(a, b)| a - b).collect();
            let z = rand_vec(&mut rng, man.dim());
            let zt = man.tangent_project(&u, &z).unwrap();
            assert!(man.dot(&r, &zt).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_matches_2x2_solve_oracle() {
        // N = 6: F = 1 with a single grid point
        let man = Manifold::new(1, 1, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..50 {
            let u = random_feasible(&man, &mut rng);
            let w = rand_vec(&mut rng, 6);
            let got = man.tangent_project(&u, &w).unwrap();

            // direct solve of [[1, M], [M, u'G2u]] [a; b] = [u'w; u'Gw]
            let g2 = man.gamma2_dot(&u, &u);
            let m = man.mag;
            let uw = man.dot(&u, &w);
            let ugw = man.gamma_dot(&u, &w);
            let det = g2 - m * m;
            let a = (g2 * uw - m * ugw) / det;
            let b = (uw * (-m) + ugw) / det;
            let gu = man.apply_gamma(&u);
            for i in 0..6 {
                let want = w[i] - a * u[i] - b * gu[i];
                assert!((got[i] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_special_cases() {
        let man = Manifold::new(2, 3, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let u = random_feasible(&man, &mut rng);
        let gu = man.apply_gamma(&u);

        // g in span{u, Gamma u} -> zero
        let g: Vec<f64> = u.iter().zip(&gu).map(|(a, b)| 1.3 * a - 0.2 * b).collect();
        let r = man.riemannian_gradient(&u, &g).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));

        // tangent g -> unchanged
        let w = rand_vec(&mut rng, man.dim());
        let t = man.tangent_project(&u, &w).unwrap();
        let r2 = man.riemannian_gradient(&u, &t).unwrap();
        let diff: f64 = t.iter().zip(&r2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-13);

        // random g -> tangency residuals
        let g3 = rand_vec(&mut rng, man.dim());
        let r3 = man.riemannian_gradient(&u, &g3).unwrap();
        assert!(man.dot(&u, &r3).abs() < 1e-12);
        assert!(man.gamma_dot(&u, &r3).abs() < 1e-12);
    }

    #[test]
    fn hessvec_matches_projected_alternate_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for f in 1..=3u32 {
            let man = Manifold::new(f, 3, 0.45 * f as f64).unwrap();
            let u = random_feasible(&man, &mut rng);
            let g = rand_vec(&mut rng, man.dim());
            let xi_raw = rand_vec(&mut rng, man.dim());
            let xi = man.tangent_project(&u, &xi_raw).unwrap();
            let h_e = rand_vec(&mut rng, man.dim());

            let got = man.riemannian_hessvec(&u, &xi, &g, &h_e).unwrap();

            // oracle: P_u(h_e - alpha_g xi - beta_g Gamma xi)
            let g2 = man.gamma2_dot(&u, &u);
            let m = man.mag;
            let au = g2 - m * m;
            let ug = man.dot(&u, &g);
            let ugg = man.gamma_dot(&u, &g);
            let alpha_g = (1.0 + m * m / au) * ug - m / au * ugg;
            let beta_g = -m / au * ug + ugg / au;
            let len = man.block_len();
            let mut inner = h_e.to_vec();
            for b in 0..man.ncomp() {
                let w = man.weight(b);
                for i in b * len..(b + 1) * len {
                    inner[i] -= (alpha_g + beta_g * w) * xi[i];
                }
            }
            let want = man.tangent_project(&u, &inner).unwrap();
            let scale: f64 = want.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12 * scale.max(1.0), "F={f}");
            }
            // output is tangent
            assert!(man.dot(&u, &got).abs() < 1e-11);
            assert!(man.gamma_dot(&u, &got).abs() < 1e-11);
        }
    }

    #[test]
    fn degenerate_point_rejected() {
        // all mass in the l = 0 block: u'G^2 u = 0
        let man = Manifold::new(1, 2, 0.0).unwrap();
        let mut u = vec![0.0; man.dim()];
        let len = man.block_len();
        u[len] = 1.0; // l = 0 block
        let w = vec![1.0; man.dim()];
        assert!(matches!(man.tangent_project(&u, &w), Err(Error::Degenerate(_))));
    }
}
