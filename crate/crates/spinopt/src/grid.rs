//! Truncated periodic computational box with a matrix-free Fourier
//! pseudospectral Laplacian and spectral grid-to-grid prolongation.
//!
//! Each axis carries bounds (a, b) and an even point count n, with nodes
//! x_j = a + j h, h = (b - a)/n, j = 0..n-1. Fourier multipliers are
//! lambda_p = 2 pi p / (b - a) for p = -n/2 .. n/2 - 1. Internally modes
//! follow the standard DFT layout (k = 0..n-1), mapped to the paper-style
//! index by p = k for k < n/2 and p = k - n otherwise; the Nyquist mode
//! k = n/2 represents p = -n/2.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// One axis of the computational box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Axis {
    #[inline]
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }
}

/// Periodic tensor grid in 1, 2 or 3 dimensions.
#[derive(Clone)]
pub struct Grid {
    axes: Vec<Axis>,
    npts: usize,
    cell_volume: f64,
    /// Per-axis squared multipliers lambda_p^2 in DFT index order.
    lam2: Vec<Vec<f64>>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("axes", &self.axes).finish()
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::Config(format!(
                "grid dimension must be 1, 2 or 3, got {}",
                axes.len()
            )));
        }
        for ax in &axes {
            if ax.n < 4 || ax.n % 2 != 0 {
                return Err(Error::Config(format!(
                    "axis point count must be even and >= 4, got {}",
                    ax.n
                )));
            }
            if !(ax.b > ax.a) || !ax.a.is_finite() || !ax.b.is_finite() {
                return Err(Error::Config(format!(
                    "axis bounds must satisfy b > a, got [{}, {}]",
                    ax.a, ax.b
                )));
            }
        }
        let npts = axes.iter().map(|ax| ax.n).product();
        let cell_volume = axes.iter().map(|ax| ax.h()).product();
        let mut planner = FftPlanner::new();
        let mut lam2 = Vec::with_capacity(axes.len());
        let mut fwd = Vec::with_capacity(axes.len());
        let mut inv = Vec::with_capacity(axes.len());
        for ax in &axes {
            let base = 2.0 * std::f64::consts::PI / (ax.b - ax.a);
            let l2 = (0..ax.n)
                .map(|k| {
                    let p = if k < ax.n / 2 { k as i64 } else { k as i64 - ax.n as i64 };
                    let lam = base * p as f64;
                    lam * lam
                })
                .collect();
            lam2.push(l2);
            fwd.push(planner.plan_fft_forward(ax.n));
            inv.push(planner.plan_fft_inverse(ax.n));
        }
        Ok(Grid { axes, npts, cell_volume, lam2, fwd, inv })
    }

    pub fn uniform(a: f64, b: f64, n: usize, dim: usize) -> Result<Self> {
        Grid::new(vec![Axis { a, b, n }; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn npts(&self) -> usize {
        self.npts
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Node coordinates along one axis.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let ax = self.axes[axis];
        let h = ax.h();
        (0..ax.n).map(|j| ax.a + j as f64 * h).collect()
    }

    /// Multi-index of the flattened (row-major) point index.
    #[inline]
    pub fn multi_index(&self, mut j: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim()).rev() {
            idx[a] = j % self.axes[a].n;
            j /= self.axes[a].n;
        }
        idx
    }

    /// Coordinates of the flattened point index.
    pub fn point(&self, j: usize) -> [f64; 3] {
        let mi = self.multi_index(j);
        let mut x = [0.0f64; 3];
        for a in 0..self.dim() {
            x[a] = self.axes[a].a + mi[a] as f64 * self.axes[a].h();
        }
        x
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.npts {
            return Err(Error::Dimension(format!(
                "field has {len} values, grid has {} points",
                self.npts
            )));
        }
        Ok(())
    }

    /// In-place FFT along `axis`. `dir = true` means forward, unnormalized.
    fn fft_axis(&self, data: &mut [Complex64], axis: usize, forward: bool) {
        let n = self.axes[axis].n;
        let stride: usize = self.axes[axis + 1..].iter().map(|ax| ax.n).product();
        let plan = if forward { &self.fwd[axis] } else { &self.inv[axis] };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                plan.process_with_scratch(chunk, &mut scratch);
            }
        } else {
            // Strided lines: gather, transform, scatter.
            let mut line = vec![Complex64::default(); n];
            let block = n * stride;
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + off + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[base + off + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Forward DFT of a field (unnormalized), all axes.
    pub fn forward(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(field.len())?;
        let mut out = field.to_vec();
        for axis in 0..self.dim() {
            self.fft_axis(&mut out, axis, true);
        }
        Ok(out)
    }

    /// Apply the pseudospectral Laplacian: transform, multiply each mode by
    /// -(lambda_{p1}^2 + ... + lambda_{pd}^2), transform back.
    /// The result is the discrete Laplacian (negative semidefinite); the
    /// energy's operator L equals its negation.
    pub fn laplacian(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(field.len())?;
        let mut out = field.to_vec();
        self.laplacian_in_place(&mut out);
        Ok(out)
    }

    /// Same as [`laplacian`](Self::laplacian) but reusing the input buffer.
    pub fn laplacian_in_place(&self, field: &mut [Complex64]) {
        debug_assert_eq!(field.len(), self.npts);
        for axis in 0..self.dim() {
            self.fft_axis(field, axis, true);
        }
        let scale = -1.0 / self.npts as f64;
        self.for_each_mode(field, |lam2_sum, v| *v *= lam2_sum * scale);
        for axis in 0..self.dim() {
            self.fft_axis(field, axis, false);
        }
    }

    /// Visit every spectral coefficient with its total squared multiplier.
    fn for_each_mode(&self, data: &mut [Complex64], mut f: impl FnMut(f64, &mut Complex64)) {
        match self.dim() {
            1 => {
                for (k, v) in data.iter_mut().enumerate() {
                    f(self.lam2[0][k], v);
                }
            }
            2 => {
                let n1 = self.axes[1].n;
                for (j, v) in data.iter_mut().enumerate() {
                    f(self.lam2[0][j / n1] + self.lam2[1][j % n1], v);
                }
            }
            _ => {
                let n1 = self.axes[1].n;
                let n2 = self.axes[2].n;
                for (j, v) in data.iter_mut().enumerate() {
                    let k2 = j % n2;
                    let rest = j / n2;
                    f(self.lam2[0][rest / n1] + self.lam2[1][rest % n1] + self.lam2[2][k2], v);
                }
            }
        }
    }

    /// Trigonometric interpolation onto a once-refined grid by spectral
    /// zero-padding. Values at coincident nodes are preserved; the coarse
    /// Nyquist coefficient is assigned entirely to the fine -n/2 slot.
    pub fn prolongate(&self, fine: &Grid, field: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(field.len())?;
        if fine.dim() != self.dim() {
            return Err(Error::Config("prolongation requires matching dimension".into()));
        }
        for (c, f) in self.axes.iter().zip(fine.axes.iter()) {
            if f.n != 2 * c.n || f.a != c.a || f.b != c.b {
                return Err(Error::Config(format!(
                    "grids not nested: coarse [{},{}] n={} vs fine [{},{}] n={}",
                    c.a, c.b, c.n, f.a, f.b, f.n
                )));
            }
        }
        let mut spec = field.to_vec();
        for axis in 0..self.dim() {
            self.fft_axis(&mut spec, axis, true);
        }
        let scale = 1.0 / self.npts as f64;
        let mut out = vec![Complex64::default(); fine.npts];
        for (j, v) in spec.iter().enumerate() {
            let mi = self.multi_index(j);
            let mut jf = 0usize;
            for a in 0..self.dim() {
                let nc = self.axes[a].n;
                let nf = fine.axes[a].n;
                let kf = if mi[a] < nc / 2 { mi[a] } else { mi[a] + nf - nc };
                jf = jf * nf + kf;
            }
            out[jf] = v * scale;
        }
        for axis in 0..self.dim() {
            fine.fft_axis(&mut out, axis, false);
        }
        Ok(out)
    }
}
