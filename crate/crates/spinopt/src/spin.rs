//! Spin matrices, pairing matrices and interaction parameters for
//! spin-1, spin-2 and spin-3 condensates.
//!
//! Components are ordered l = F, F-1, ..., -F, so basis index `b`
//! corresponds to the spin projection `l = F - b`.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Dense complex matrix of side `dim` (at most 7), row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinMat {
    dim: usize,
    a: Vec<Complex64>,
}

impl SpinMat {
    pub fn zeros(dim: usize) -> Self {
        SpinMat {
            dim,
            a: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.a[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.a[r * self.dim + c] = v;
    }

    /// y = M x for small vectors; `x` and `y` must have length `dim`.
    #[inline]
    pub fn mul_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.dim;
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            let row = &self.a[r * n..(r + 1) * n];
            for c in 0..n {
                acc += row[c] * x[c];
            }
            y[r] = acc;
        }
    }

    /// Quadratic form x^T M x (no conjugation).
    #[inline]
    pub fn quad_form(&self, x: &[Complex64]) -> Complex64 {
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            let row = &self.a[r * n..(r + 1) * n];
            let mut inner = Complex64::new(0.0, 0.0);
            for c in 0..n {
                inner += row[c] * x[c];
            }
            acc += x[r] * inner;
        }
        acc
    }

    /// Sesquilinear form x* M x; real up to rounding when M is Hermitian.
    #[inline]
    pub fn herm_form(&self, x: &[Complex64]) -> Complex64 {
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            let row = &self.a[r * n..(r + 1) * n];
            let mut inner = Complex64::new(0.0, 0.0);
            for c in 0..n {
                inner += row[c] * x[c];
            }
            acc += x[r].conj() * inner;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// C = A B - B A, used by identity checks.
    pub fn commutator(&self, other: &SpinMat) -> SpinMat {
        let n = self.dim;
        let mut out = SpinMat::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.get(r, k) * other.get(k, c) - other.get(r, k) * self.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        out
    }
}

/// Spin matrices and pairing matrices for a given F, built once per solve
/// and immutable afterwards.
#[derive(Clone, Debug)]
pub struct SpinAlgebra {
    pub f: u32,
    pub fx: SpinMat,
    pub fy: SpinMat,
    pub fz: SpinMat,
    /// Spin-singlet pairing matrix A (F = 2, 3); absent for F = 1.
    pub pair_a: Option<SpinMat>,
    /// Spin-quintet pairing matrices A_{2l}, l = 2, 1, 0, -1, -2; F = 3 only.
    pub pair_a2: Option<[SpinMat; 5]>,
}

const S21: f64 = 4.58257569495584; // sqrt(21)

impl SpinAlgebra {
    /// Build the algebra for F in {1, 2, 3}.
    pub fn new(f: u32) -> Result<Self> {
        if !(1..=3).contains(&f) {
            return Err(Error::Config(format!("unsupported spin F = {f} (need 1, 2 or 3)")));
        }
        let dim = (2 * f + 1) as usize;
        let ff = f as f64;

        let mut fx = SpinMat::zeros(dim);
        let mut fy = SpinMat::zeros(dim);
        let mut fz = SpinMat::zeros(dim);
        for b in 0..dim {
            let l = ff - b as f64;
            fz.set(b, b, Complex64::new(l, 0.0));
        }
        // Ladder off-diagonals: <l| f_x |l-1> = sqrt((F+l)(F-l+1)) / 2.
        for b in 0..dim - 1 {
            let l = ff - b as f64;
            let c = 0.5 * ((ff + l) * (ff - l + 1.0)).sqrt();
            fx.set(b, b + 1, Complex64::new(c, 0.0));
            fx.set(b + 1, b, Complex64::new(c, 0.0));
            fy.set(b, b + 1, Complex64::new(0.0, -c));
            fy.set(b + 1, b, Complex64::new(0.0, c));
        }

        let pair_a = match f {
            2 | 3 => {
                let mut a = SpinMat::zeros(dim);
                let norm = 1.0 / ((2.0 * ff + 1.0).sqrt());
                for b in 0..dim {
                    let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                    a.set(b, dim - 1 - b, Complex64::new(sign * norm, 0.0));
                }
                Some(a)
            }
            _ => None,
        };

        // Each A_{2l} is the unique symmetric matrix whose quadratic form
        // Psi^T A_{2l} Psi reproduces the explicit amplitude polynomial;
        // all nonzero entries sit on the anti-diagonal row+col = 8-l (1-based).
        let pair_a2 = if f == 3 {
            let re = |v: f64| Complex64::new(v, 0.0);
            let mut a2p2 = SpinMat::zeros(dim);
            a2p2.set(0, 4, re(10f64.sqrt() / (2.0 * S21)));
            a2p2.set(4, 0, re(10f64.sqrt() / (2.0 * S21)));
            a2p2.set(1, 3, re(-20f64.sqrt() / (2.0 * S21)));
            a2p2.set(3, 1, re(-20f64.sqrt() / (2.0 * S21)));
            a2p2.set(2, 2, re(2f64.sqrt() / S21));

            let mut a2p1 = SpinMat::zeros(dim);
            a2p1.set(0, 5, re(5.0 / (2.0 * S21)));
            a2p1.set(5, 0, re(5.0 / (2.0 * S21)));
            a2p1.set(1, 4, re(-15f64.sqrt() / (2.0 * S21)));
            a2p1.set(4, 1, re(-15f64.sqrt() / (2.0 * S21)));
            a2p1.set(2, 3, re(2f64.sqrt() / (2.0 * S21)));
            a2p1.set(3, 2, re(2f64.sqrt() / (2.0 * S21)));

            let mut a20 = SpinMat::zeros(dim);
            a20.set(0, 6, re(5.0 / (2.0 * S21)));
            a20.set(6, 0, re(5.0 / (2.0 * S21)));
            a20.set(2, 4, re(-3.0 / (2.0 * S21)));
            a20.set(4, 2, re(-3.0 / (2.0 * S21)));
            a20.set(3, 3, re(2f64.sqrt() / S21));

            let mut a2m1 = SpinMat::zeros(dim);
            a2m1.set(1, 6, re(5.0 / (2.0 * S21)));
            a2m1.set(6, 1, re(5.0 / (2.0 * S21)));
            a2m1.set(2, 5, re(-15f64.sqrt() / (2.0 * S21)));
            a2m1.set(5, 2, re(-15f64.sqrt() / (2.0 * S21)));
            a2m1.set(3, 4, re(2f64.sqrt() / (2.0 * S21)));
            a2m1.set(4, 3, re(2f64.sqrt() / (2.0 * S21)));

            let mut a2m2 = SpinMat::zeros(dim);
            a2m2.set(2, 6, re(10f64.sqrt() / (2.0 * S21)));
            a2m2.set(6, 2, re(10f64.sqrt() / (2.0 * S21)));
            a2m2.set(3, 5, re(-20f64.sqrt() / (2.0 * S21)));
            a2m2.set(5, 3, re(-20f64.sqrt() / (2.0 * S21)));
            a2m2.set(4, 4, re(2f64.sqrt() / S21));

            Some([a2p2, a2p1, a20, a2m1, a2m2])
        } else {
            None
        };

        Ok(SpinAlgebra { f, fx, fy, fz, pair_a, pair_a2 })
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        (2 * self.f + 1) as usize
    }

    /// Zeeman diagonal b_l = -p l + q l^2, ordered l = F, ..., -F.
    pub fn zeeman(&self, p: f64, q: f64) -> Vec<f64> {
        (0..self.ncomp())
            .map(|b| {
                let l = self.f as f64 - b as f64;
                -p * l + q * l * l
            })
            .collect()
    }
}

/// Physical interaction strengths and constraint targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionParams {
    pub beta0: f64,
    pub beta1: f64,
    /// Spin-singlet strength; unused for F = 1.
    pub beta2: f64,
    /// Spin-quintet strength; unused for F <= 2.
    pub beta3: f64,
    /// Linear Zeeman shift.
    pub p: f64,
    /// Quadratic Zeeman shift.
    pub q: f64,
    /// Target magnetization, |M| < F.
    pub m: f64,
}

impl InteractionParams {
    pub fn validate(&self, f: u32) -> Result<()> {
        if !self.m.is_finite() || self.m.abs() >= f as f64 {
            return Err(Error::Config(format!(
                "magnetization M = {} must satisfy |M| < F = {}",
                self.m, f
            )));
        }
        for (name, v) in [
            ("beta0", self.beta0),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("p", self.p),
            ("q", self.q),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter {name} is not finite")));
            }
        }
        Ok(())
    }
}
