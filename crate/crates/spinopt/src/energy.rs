//! Discretized Gross-Pitaevskii energy, its Euclidean gradient and
//! Hessian-vector products, plus trapping potentials and initial data.
//!
//! The state X stores sqrt(cell volume)-scaled wave function samples, so
//! tr(X* X) equals the discrete mass and all quartic interaction terms
//! carry the 1/(2 vol) weight that turns the component sums into
//! trapezoidal quadratures of the continuous functional.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spin::{InteractionParams, SpinAlgebra, SpinMat};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Complex coefficient array of shape (grid points) x (2F+1), stored
/// component-major: entry (j, b) lives at `data[b * npts + j]`.
/// Columns are ordered l = F, F-1, ..., -F.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField {
    pub data: Vec<Complex64>,
    pub npts: usize,
    pub ncomp: usize,
}

impl StateField {
    pub fn zeros(npts: usize, ncomp: usize) -> Self {
        StateField { data: vec![Complex64::default(); npts * ncomp], npts, ncomp }
    }

    #[inline]
    pub fn component(&self, b: usize) -> &[Complex64] {
        &self.data[b * self.npts..(b + 1) * self.npts]
    }

    #[inline]
    pub fn component_mut(&mut self, b: usize) -> &mut [Complex64] {
        &mut self.data[b * self.npts..(b + 1) * self.npts]
    }

    #[inline]
    pub fn get(&self, j: usize, b: usize) -> Complex64 {
        self.data[b * self.npts + j]
    }

    /// Row j as a small component vector (length 2F+1).
    #[inline]
    pub fn row(&self, j: usize, out: &mut [Complex64]) {
        for (b, v) in out.iter_mut().enumerate() {
            *v = self.data[b * self.npts + j];
        }
    }

    /// Discrete mass tr(X* X).
    pub fn mass(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Discrete magnetization tr(X* X D), D = diag(F..-F).
    pub fn magnetization(&self, f: u32) -> f64 {
        (0..self.ncomp)
            .map(|b| {
                let l = f as f64 - b as f64;
                l * self.component(b).iter().map(|z| z.norm_sqr()).sum::<f64>()
            })
            .sum()
    }

    /// Real inner product Re tr(Y* X).
    pub fn dot_re(&self, other: &StateField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum()
    }
}

/// Pointwise densities entering the interaction terms.
#[derive(Clone, Debug)]
pub struct Densities {
    pub rho: Vec<f64>,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub fz: Vec<f64>,
    /// Spin-singlet amplitude; present for F >= 2.
    pub a00: Option<Vec<Complex64>>,
    /// Spin-quintet amplitudes A_{2l}, l = 2..-2; present for F = 3.
    pub a2l: Option<[Vec<Complex64>; 5]>,
}

/// Separable trapping potential: per axis, a harmonic weight w (the term
/// w * alpha^2 / 2) and an optical lattice kappa * sin^2(pi alpha / s).
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub harmonic: Vec<f64>,
    pub lattice_amp: Vec<f64>,
    pub lattice_period: Vec<f64>,
}

impl PotentialSpec {
    pub fn zero(dim: usize) -> Self {
        PotentialSpec {
            harmonic: vec![0.0; dim],
            lattice_amp: vec![0.0; dim],
            lattice_period: vec![1.0; dim],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.harmonic.len() != dim
            || self.lattice_amp.len() != dim
            || self.lattice_period.len() != dim
        {
            return Err(Error::Config(format!(
                "potential spec has {} axes, grid has {dim}",
                self.harmonic.len()
            )));
        }
        if self.lattice_period.iter().any(|&s| s == 0.0 || !s.is_finite()) {
            return Err(Error::Config("lattice period must be nonzero".into()));
        }
        Ok(())
    }
}

/// Sample the potential at the grid nodes.
pub fn build_potential(grid: &Grid, spec: &PotentialSpec) -> Result<Vec<f64>> {
    spec.validate(grid.dim())?;
    let mut v = vec![0.0f64; grid.npts()];
    for (j, val) in v.iter_mut().enumerate() {
        let x = grid.point(j);
        let mut acc = 0.0;
        for a in 0..grid.dim() {
            let t = x[a];
            acc += 0.5 * spec.harmonic[a] * t * t;
            if spec.lattice_amp[a] != 0.0 {
                let s = (std::f64::consts::PI * t / spec.lattice_period[a]).sin();
                acc += spec.lattice_amp[a] * s * s;
            }
        }
        *val = acc;
    }
    Ok(v)
}

/// Interaction regime selecting the paper's initial component mixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitRegime {
    Ferromagnetic,
    Antiferromagnetic,
    Nematic,
    Cyclic,
    Random,
}

impl InitRegime {
    /// Derive the regime from the interaction signs.
    pub fn auto(f: u32, params: &InteractionParams) -> InitRegime {
        match f {
            1 => {
                if params.beta1 <= 0.0 {
                    InitRegime::Ferromagnetic
                } else {
                    InitRegime::Antiferromagnetic
                }
            }
            2 => {
                if params.beta1 < 0.0 && params.beta2 > 20.0 * params.beta1 {
                    InitRegime::Ferromagnetic
                } else if params.beta1 > 0.0 && params.beta2 > 0.0 {
                    InitRegime::Cyclic
                } else {
                    InitRegime::Nematic
                }
            }
            _ => InitRegime::Random,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitRegime::Ferromagnetic => "ferromagnetic",
            InitRegime::Antiferromagnetic => "antiferromagnetic",
            InitRegime::Nematic => "nematic",
            InitRegime::Cyclic => "cyclic",
            InitRegime::Random => "random",
        }
    }
}

/// Component mixture U for the initial state Phi_0 = U phi_0(x).
pub fn initial_mixture(f: u32, m: f64, regime: InitRegime, seed: u64) -> Result<Vec<f64>> {
    if m.abs() >= f as f64 {
        return Err(Error::Config(format!("|M| = {} must be < F = {f}", m.abs())));
    }
    // M <-> -M corresponds to component reversal; build for |M| and flip.
    let mm = m.abs();
    let mut u = match (f, regime) {
        (1, InitRegime::Ferromagnetic) => {
            vec![(1.0 + 3.0 * mm).sqrt() / 2.0, ((1.0 - mm) / 2.0).sqrt(), (1.0 - mm).sqrt() / 2.0]
        }
        (1, _) => vec![((1.0 + mm) / 2.0).sqrt(), 0.0, ((1.0 - mm) / 2.0).sqrt()],
        (2, InitRegime::Ferromagnetic) => {
            let m1 = (2.0 + mm).sqrt();
            let m2 = (2.0 - mm).sqrt();
            vec![
                m1.powi(4) / 16.0,
                m1.powi(3) * m2 / 8.0,
                6f64.sqrt() * m1 * m1 * m2 * m2 / 16.0,
                m1 * m2.powi(3) / 8.0,
                m2.powi(4) / 16.0,
            ]
        }
        (2, InitRegime::Cyclic) => {
            vec![((mm + 1.0) / 3.0).sqrt(), 0.0, 0.0, ((2.0 - mm) / 3.0).sqrt(), 0.0]
        }
        (2, _) => vec![(2.0 + mm).sqrt() / 2.0, 0.0, 0.0, 0.0, (2.0 - mm).sqrt() / 2.0],
        (3, _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..7).map(|_| rng.gen_range(0.0..1.0)).collect()
        }
        _ => return Err(Error::Config(format!("unsupported spin F = {f}"))),
    };
    if m < 0.0 {
        u.reverse();
    }
    Ok(u)
}

/// Gaussian profile times the mixture U, quadrature-scaled. The result is
/// approximately feasible; callers retract it onto the constraint set.
pub fn initial_profile(grid: &Grid, u: &[f64]) -> StateField {
    let d = grid.dim() as f64;
    let amp = std::f64::consts::PI.powf(-d / 4.0);
    let scale = grid.cell_volume().sqrt();
    let npts = grid.npts();
    let mut x = StateField::zeros(npts, u.len());
    let mut gauss = vec![0.0f64; npts];
    for (j, g) in gauss.iter_mut().enumerate() {
        let p = grid.point(j);
        let r2: f64 = (0..grid.dim()).map(|a| p[a] * p[a]).sum();
        *g = amp * (-r2 / 2.0).exp() * scale;
    }
    for (b, &ub) in u.iter().enumerate() {
        for (j, &g) in gauss.iter().enumerate() {
            x.component_mut(b)[j] = Complex64::new(ub * g, 0.0);
        }
    }
    x
}

/// The assembled discrete energy: grid, spin algebra, interaction
/// parameters, sampled potential and Zeeman diagonal.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    pub grid: Grid,
    pub algebra: SpinAlgebra,
    pub params: InteractionParams,
    pub v: Vec<f64>,
    zeeman: Vec<f64>,
}

/// Quantities at the expansion point X that every Hessian-vector product
/// reuses. Rebuilt whenever the anchor point changes.
#[derive(Clone)]
pub struct HessContext {
    pub x: StateField,
    pub dens: Densities,
}

impl EnergyModel {
    pub fn new(
        grid: Grid,
        algebra: SpinAlgebra,
        params: InteractionParams,
        potential: &PotentialSpec,
    ) -> Result<Self> {
        params.validate(algebra.f)?;
        let v = build_potential(&grid, potential)?;
        let zeeman = algebra.zeeman(params.p, params.q);
        Ok(EnergyModel { grid, algebra, params, v, zeeman })
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.algebra.ncomp()
    }

    fn check_state(&self, x: &StateField) -> Result<()> {
        if x.npts != self.grid.npts() || x.ncomp != self.ncomp() {
            return Err(Error::Dimension(format!(
                "state is {}x{}, model needs {}x{}",
                x.npts,
                x.ncomp,
                self.grid.npts(),
                self.ncomp()
            )));
        }
        Ok(())
    }

    /// rho, F_alpha and pairing amplitudes at every grid point.
    pub fn densities(&self, x: &StateField) -> Densities {
        let npts = x.npts;
        let c = x.ncomp;
        let alg = &self.algebra;
        let mut rho = vec![0.0f64; npts];
        let mut fx = vec![0.0f64; npts];
        let mut fy = vec![0.0f64; npts];
        let mut fz = vec![0.0f64; npts];
        let mut a00 = alg.pair_a.as_ref().map(|_| vec![Complex64::default(); npts]);
        let mut a2l = alg
            .pair_a2
            .as_ref()
            .map(|_| std::array::from_fn::<_, 5, _>(|_| vec![Complex64::default(); npts]));

        let mut row = vec![Complex64::default(); c];
        let mut tmp = vec![Complex64::default(); c];
        for j in 0..npts {
            x.row(j, &mut row);
            rho[j] = row.iter().map(|z| z.norm_sqr()).sum();
            fx[j] = herm_form_re(&alg.fx, &row, &mut tmp);
            fy[j] = herm_form_re(&alg.fy, &row, &mut tmp);
            fz[j] = herm_form_re(&alg.fz, &row, &mut tmp);
            if let (Some(a), Some(out)) = (alg.pair_a.as_ref(), a00.as_mut()) {
                out[j] = a.quad_form(&row);
            }
            if let (Some(mats), Some(outs)) = (alg.pair_a2.as_ref(), a2l.as_mut()) {
                for (mat, out) in mats.iter().zip(outs.iter_mut()) {
                    out[j] = mat.quad_form(&row);
                }
            }
        }
        Densities { rho, fx, fy, fz, a00, a2l }
    }

    /// E_h(X); errors if the result is not finite.
    pub fn energy(&self, x: &StateField) -> Result<f64> {
        self.check_state(x)?;
        let dens = self.densities(x);
        let lap = self.lap_field(x);
        Ok(self.energy_given(x, &dens, &lap)?)
    }

    /// Energy and Euclidean gradient together, sharing the Laplacian and
    /// density evaluations.
    pub fn energy_and_gradient(&self, x: &StateField) -> Result<(f64, StateField)> {
        self.check_state(x)?;
        let dens = self.densities(x);
        let lap = self.lap_field(x);
        let e = self.energy_given(x, &dens, &lap)?;
        let g = self.gradient_given(x, &dens, &lap);
        Ok((e, g))
    }

    /// Euclidean gradient nabla E_h(X).
    pub fn euclidean_gradient(&self, x: &StateField) -> StateField {
        let dens = self.densities(x);
        let lap = self.lap_field(x);
        self.gradient_given(x, &dens, &lap)
    }

    pub fn hess_context(&self, x: &StateField) -> HessContext {
        HessContext { x: x.clone(), dens: self.densities(x) }
    }

    /// Laplacian applied to every component.
    fn lap_field(&self, x: &StateField) -> StateField {
        let mut out = x.clone();
        for b in 0..x.ncomp {
            self.grid.laplacian_in_place(out.component_mut(b));
        }
        out
    }

    fn energy_given(&self, x: &StateField, dens: &Densities, lap: &StateField) -> Result<f64> {
        let p = &self.params;
        let inv_vol = 1.0 / self.grid.cell_volume();

        // 1/2 tr(X* L X) with L = -laplacian
        let kinetic = -0.5 * lap.dot_re(x);

        let mut pot = 0.0;
        for (vj, &rj) in self.v.iter().zip(&dens.rho) {
            pot += vj * rj;
        }

        let mut zee = 0.0;
        for b in 0..x.ncomp {
            if self.zeeman[b] != 0.0 {
                zee += self.zeeman[b] * x.component(b).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }

        let quartic0: f64 = dens.rho.iter().map(|r| r * r).sum();
        let spin_sq: f64 = (0..x.npts)
            .map(|j| dens.fx[j] * dens.fx[j] + dens.fy[j] * dens.fy[j] + dens.fz[j] * dens.fz[j])
            .sum();
        let mut e = kinetic + pot + zee + 0.5 * inv_vol * (p.beta0 * quartic0 + p.beta1 * spin_sq);
        if let Some(a00) = &dens.a00 {
            let s: f64 = a00.iter().map(|z| z.norm_sqr()).sum();
            e += 0.5 * inv_vol * p.beta2 * s;
        }
        if let Some(a2l) = &dens.a2l {
            let s: f64 = a2l.iter().flat_map(|v| v.iter()).map(|z| z.norm_sqr()).sum();
            e += 0.5 * inv_vol * p.beta3 * s;
        }
        if !e.is_finite() {
            return Err(Error::Numerical("energy is not finite".into()));
        }
        Ok(e)
    }

    fn gradient_given(&self, x: &StateField, dens: &Densities, lap: &StateField) -> StateField {
        let p = &self.params;
        let npts = x.npts;
        let c = x.ncomp;
        let inv_vol = 1.0 / self.grid.cell_volume();
        let alg = &self.algebra;
        let mut g = StateField::zeros(npts, c);

        // L X + 2 V X + 2 X B + (2 beta0 / vol) diag(rho) X
        for b in 0..c {
            let xb = x.component(b);
            let lb = lap.component(b);
            let gb = g.component_mut(b);
            let zb = 2.0 * self.zeeman[b];
            for j in 0..npts {
                gb[j] = -lb[j]
                    + (2.0 * self.v[j] + zb + 2.0 * p.beta0 * inv_vol * dens.rho[j]) * xb[j];
            }
        }

        let mut row = vec![Complex64::default(); c];
        let mut tmp = vec![Complex64::default(); c];
        let mut acc = vec![Complex64::default(); c];

        for j in 0..npts {
            x.row(j, &mut row);
            acc.iter_mut().for_each(|z| *z = Complex64::default());

            if p.beta1 != 0.0 {
                // (2 beta1 / vol) sum_alpha F_alpha (f_alpha x_j)
                let w = 2.0 * p.beta1 * inv_vol;
                for (mat, dv) in
                    [(&alg.fx, &dens.fx), (&alg.fy, &dens.fy), (&alg.fz, &dens.fz)]
                {
                    mat.mul_vec(&row, &mut tmp);
                    let s = w * dv[j];
                    for b in 0..c {
                        acc[b] += s * tmp[b];
                    }
                }
            }
            if p.beta2 != 0.0 {
                if let (Some(a), Some(a00)) = (alg.pair_a.as_ref(), dens.a00.as_ref()) {
                    // (2 beta2 / vol) A00 (A conj(x_j)); A symmetric
                    let conj_row: Vec<Complex64> = row.iter().map(|z| z.conj()).collect();
                    a.mul_vec(&conj_row, &mut tmp);
                    let s = 2.0 * p.beta2 * inv_vol * a00[j];
                    for b in 0..c {
                        acc[b] += s * tmp[b];
                    }
                }
            }
            if p.beta3 != 0.0 {
                if let (Some(mats), Some(a2l)) = (alg.pair_a2.as_ref(), dens.a2l.as_ref()) {
                    let conj_row: Vec<Complex64> = row.iter().map(|z| z.conj()).collect();
                    let w = 2.0 * p.beta3 * inv_vol;
                    for (mat, amp) in mats.iter().zip(a2l.iter()) {
                        mat.mul_vec(&conj_row, &mut tmp);
                        let s = w * amp[j];
                        for b in 0..c {
                            acc[b] += s * tmp[b];
                        }
                    }
                }
            }
            for b in 0..c {
                g.data[b * npts + j] += acc[b];
            }
        }
        g
    }

    /// Hessian-vector product nabla^2 E_h(X)[Z]; real-linear in Z.
    pub fn hessvec(&self, ctx: &HessContext, z: &StateField) -> StateField {
        let p = &self.params;
        let x = &ctx.x;
        let dens = &ctx.dens;
        let npts = x.npts;
        let c = x.ncomp;
        let inv_vol = 1.0 / self.grid.cell_volume();
        let alg = &self.algebra;

        let lap_z = self.lap_field(z);
        let mut h = StateField::zeros(npts, c);

        for b in 0..c {
            let zb = z.component(b);
            let lb = lap_z.component(b);
            let hb = h.component_mut(b);
            let zee = 2.0 * self.zeeman[b];
            for j in 0..npts {
                hb[j] =
                    -lb[j] + (2.0 * self.v[j] + zee + 2.0 * p.beta0 * inv_vol * dens.rho[j]) * zb[j];
            }
        }

        let mut xr = vec![Complex64::default(); c];
        let mut zr = vec![Complex64::default(); c];
        let mut tmp = vec![Complex64::default(); c];
        let mut tmp2 = vec![Complex64::default(); c];
        let mut acc = vec![Complex64::default(); c];

        for j in 0..npts {
            x.row(j, &mut xr);
            z.row(j, &mut zr);
            acc.iter_mut().for_each(|v| *v = Complex64::default());

            // (2 beta0 / vol) * 2 Re(z x*) x
            let re_zx: f64 = zr.iter().zip(&xr).map(|(a, b)| (a * b.conj()).re).sum();
            let w0 = 4.0 * p.beta0 * inv_vol * re_zx;
            for b in 0..c {
                acc[b] += w0 * xr[b];
            }

            if p.beta1 != 0.0 {
                let w = 2.0 * p.beta1 * inv_vol;
                for (mat, dv) in
                    [(&alg.fx, &dens.fx), (&alg.fy, &dens.fy), (&alg.fz, &dens.fz)]
                {
                    mat.mul_vec(&zr, &mut tmp); // f_alpha z_j
                    mat.mul_vec(&xr, &mut tmp2); // f_alpha x_j
                    // Re(x* f_alpha z)
                    let re_fz: f64 =
                        xr.iter().zip(&tmp).map(|(a, b)| (a.conj() * b).re).sum();
                    let s1 = w * dv[j];
                    let s2 = 2.0 * w * re_fz;
                    for b in 0..c {
                        acc[b] += s1 * tmp[b] + s2 * tmp2[b];
                    }
                }
            }
            if p.beta2 != 0.0 {
                if let (Some(a), Some(a00)) = (alg.pair_a.as_ref(), dens.a00.as_ref()) {
                    let conj_z: Vec<Complex64> = zr.iter().map(|v| v.conj()).collect();
                    let conj_x: Vec<Complex64> = xr.iter().map(|v| v.conj()).collect();
                    a.mul_vec(&conj_z, &mut tmp); // A conj(z)
                    a.mul_vec(&conj_x, &mut tmp2); // A conj(x)
                    // z^T A x (complex, no conjugation)
                    let zax: Complex64 = zr
                        .iter()
                        .zip(tmp2.iter())
                        .map(|(zv, axc)| zv * axc.conj())
                        .sum();
                    let w = 2.0 * p.beta2 * inv_vol;
                    let s1 = w * a00[j];
                    let s2 = 2.0 * w * zax;
                    for b in 0..c {
                        acc[b] += s1 * tmp[b] + s2 * tmp2[b];
                    }
                }
            }
            if p.beta3 != 0.0 {
                if let (Some(mats), Some(a2l)) = (alg.pair_a2.as_ref(), dens.a2l.as_ref()) {
                    let conj_z: Vec<Complex64> = zr.iter().map(|v| v.conj()).collect();
                    let conj_x: Vec<Complex64> = xr.iter().map(|v| v.conj()).collect();
                    let w = 2.0 * p.beta3 * inv_vol;
                    for (mat, amp) in mats.iter().zip(a2l.iter()) {
                        mat.mul_vec(&conj_z, &mut tmp);
                        mat.mul_vec(&conj_x, &mut tmp2);
                        let zax: Complex64 = zr
                            .iter()
                            .zip(tmp2.iter())
                            .map(|(zv, axc)| zv * axc.conj())
                            .sum();
                        let s1 = w * amp[j];
                        let s2 = 2.0 * w * zax;
                        for b in 0..c {
                            acc[b] += s1 * tmp[b] + s2 * tmp2[b];
                        }
                    }
                }
            }
            for b in 0..c {
                h.data[b * npts + j] += acc[b];
            }
        }
        h
    }
}

#[inline]
fn herm_form_re(mat: &SpinMat, row: &[Complex64], tmp: &mut [Complex64]) -> f64 {
    mat.mul_vec(row, tmp);
    row.iter().zip(tmp.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn params(beta: [f64; 4], p: f64, q: f64, m: f64) -> InteractionParams {
        InteractionParams {
            beta0: beta[0],
            beta1: beta[1],
            beta2: beta[2],
            beta3: beta[3],
            p,
            q,
            m,
        }
    }

    fn rand_state(rng: &mut impl Rng, npts: usize, ncomp: usize) -> StateField {
        let mut x = StateField::zeros(npts, ncomp);
        for v in x.data.iter_mut() {
            *v = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        }
        x
    }

    fn model(f: u32, beta: [f64; 4], n: usize) -> EnergyModel {
        let grid = Grid::uniform(-4.0, 4.0, n, 1).unwrap();
        let spec = PotentialSpec {
            harmonic: vec![1.0],
            lattice_amp: vec![2.0],
            lattice_period: vec![2.0],
        };
        EnergyModel::new(grid, SpinAlgebra::new(f).unwrap(), params(beta, 0.3, 0.1, 0.0), &spec)
            .unwrap()
    }

    #[test]
    fn potential_pointwise() {
        // 1/2 x^2 + 25 sin^2(pi x / 4) at x = 2 -> 2 + 25
        let grid = Grid::uniform(-8.0, 8.0, 16, 1).unwrap();
        let spec = PotentialSpec {
            harmonic: vec![1.0],
            lattice_amp: vec![25.0],
            lattice_period: vec![4.0],
        };
        let v = build_potential(&grid, &spec).unwrap();
        let j = grid.coords(0).iter().position(|&x| (x - 2.0).abs() < 1e-12).unwrap();
        assert!((v[j] - 27.0).abs() < 1e-12);

        let zero = build_potential(&grid, &PotentialSpec::zero(1)).unwrap();
        assert!(zero.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn potential_2d_matches_direct_evaluation() {
        let grid = Grid::new(vec![Axis { a: -2.0, b: 2.0, n: 4 }, Axis { a: -1.0, b: 3.0, n: 4 }])
            .unwrap();
        let spec = PotentialSpec {
            harmonic: vec![1.0, 2.0],
            lattice_amp: vec![10.0, 5.0],
            lattice_period: vec![4.0, 2.0],
        };
        let v = build_potential(&grid, &spec).unwrap();
        for j in 0..grid.npts() {
            let p = grid.point(j);
            let want = 0.5 * p[0] * p[0]
                + 10.0 * (std::f64::consts::PI * p[0] / 4.0).sin().powi(2)
                + p[1] * p[1]
                + 5.0 * (std::f64::consts::PI * p[1] / 2.0).sin().powi(2);
            assert!((v[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn densities_single_component() {
        // only l = F occupied -> Fz = F rho, Fx = Fy = 0
        for f in 1..=3u32 {
            let m = model(f, [1.0, 1.0, 1.0, 1.0], 8);
            let mut x = StateField::zeros(8, m.ncomp());
            for (j, v) in x.component_mut(0).iter_mut().enumerate() {
                *v = Complex64::new(0.1 * (j as f64 + 1.0), -0.05);
            }
            let d = m.densities(&x);
            for j in 0..8 {
                assert!((d.fz[j] - f as f64 * d.rho[j]).abs() < 1e-14);
                assert!(d.fx[j].abs() < 1e-14);
                assert!(d.fy[j].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn densities_spin1_middle_component() {
        let m = model(1, [1.0, 1.0, 0.0, 0.0], 8);
        let mut x = StateField::zeros(8, 3);
        x.component_mut(1)[3] = Complex64::new(0.3, 0.4);
        let d = m.densities(&x);
        assert!((d.rho[3] - 0.25).abs() < 1e-15);
        assert!(d.fx[3].abs() < 1e-15 && d.fy[3].abs() < 1e-15 && d.fz[3].abs() < 1e-15);
    }

    #[test]
    fn energy_zero_for_free_constant_state() {
        let grid = Grid::uniform(-4.0, 4.0, 8, 1).unwrap();
        let m = EnergyModel::new(
            grid,
            SpinAlgebra::new(1).unwrap(),
            params([0.0; 4], 0.0, 0.0, 0.0),
            &PotentialSpec::zero(1),
        )
        .unwrap();
        let mut x = StateField::zeros(8, 3);
        let amp = (1.0f64 / 8.0).sqrt();
        for v in x.component_mut(0).iter_mut() {
            *v = Complex64::new(amp, 0.0);
        }
        assert!((x.mass() - 1.0).abs() < 1e-14);
        assert!(m.energy(&x).unwrap().abs() < 1e-13);
    }

    #[test]
    fn potential_energy_matches_quadrature() {
        // all beta = 0, p = q = 0: E = sum_j V_j rho_j (quadrature oracle)
        let grid = Grid::uniform(-4.0, 4.0, 16, 1).unwrap();
        let spec = PotentialSpec {
            harmonic: vec![1.0],
            lattice_amp: vec![0.0],
            lattice_period: vec![1.0],
        };
        let m = EnergyModel::new(
            grid.clone(),
            SpinAlgebra::new(1).unwrap(),
            params([0.0; 4], 0.0, 0.0, 0.0),
            &spec,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = rand_state(&mut rng, 16, 3);
        // strip the kinetic term by making the state constant per component
        for b in 0..3 {
            let v = x.component(b)[0];
            for z in x.component_mut(b).iter_mut() {
                *z = v;
            }
        }
        let e = m.energy(&x).unwrap();
        let h = grid.axes()[0].h();
        let mut want = 0.0;
        for j in 0..16 {
            let xj = grid.point(j)[0];
            let rho: f64 = (0..3).map(|b| x.get(j, b).norm_sqr()).sum();
            want += 0.5 * xj * xj * rho;
        }
        let _ = h;
        assert!((e - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn gradient_constant_free_state_is_zero() {
        let grid = Grid::uniform(-4.0, 4.0, 8, 1).unwrap();
        let m = EnergyModel::new(
            grid,
            SpinAlgebra::new(1).unwrap(),
            params([0.0; 4], 0.0, 0.0, 0.0),
            &PotentialSpec::zero(1),
        )
        .unwrap();
        let mut x = StateField::zeros(8, 3);
        for v in x.component_mut(0).iter_mut() {
            *v = Complex64::new(0.3, 0.1);
        }
        let g = m.euclidean_gradient(&x);
        assert!(g.data.iter().all(|z| z.norm() < 1e-13));
    }

    fn fd_gradient_check(f: u32, beta: [f64; 4], seed: u64) {
        let m = model(f, beta, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rand_state(&mut rng, 8, m.ncomp());
        let delta = rand_state(&mut rng, 8, m.ncomp());
        let g = m.euclidean_gradient(&x);
        let t = 1e-5;
        let mut xp = x.clone();
        let mut xm = x.clone();
        for ((p, mi), d) in xp.data.iter_mut().zip(xm.data.iter_mut()).zip(&delta.data) {
            *p += t * d;
            *mi -= t * d;
        }
        let fd = (m.energy(&xp).unwrap() - m.energy(&xm).unwrap()) / (2.0 * t);
        let want = g.dot_re(&delta);
        assert!(
            (fd - want).abs() <= 1e-6 * want.abs().max(1.0),
            "F={f} fd={fd} want={want}"
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (i, f) in (1..=3u32).enumerate() {
            for k in 0..20 {
                fd_gradient_check(f, [80.0, 7.0, -3.0, 1.5], (i * 100 + k) as u64);
            }
        }
    }

    fn fd_hessian_check(f: u32, beta: [f64; 4], seed: u64) {
        let m = model(f, beta, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rand_state(&mut rng, 8, m.ncomp());
        let z = rand_state(&mut rng, 8, m.ncomp());
        let ctx = m.hess_context(&x);
        let h = m.hessvec(&ctx, &z);
        let t = 1e-5;
        let mut xp = x.clone();
        let mut xm = x.clone();
        for ((p, mi), d) in xp.data.iter_mut().zip(xm.data.iter_mut()).zip(&z.data) {
            *p += t * d;
            *mi -= t * d;
        }
        let gp = m.euclidean_gradient(&xp);
        let gm = m.euclidean_gradient(&xm);
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for ((a, b), hv) in gp.data.iter().zip(&gm.data).zip(&h.data) {
            let fd = (a - b) / (2.0 * t);
            err = err.max((fd - hv).norm());
            scale = scale.max(hv.norm());
        }
        assert!(err <= 1e-5 * scale.max(1.0), "F={f}: err={err} scale={scale}");
    }

    #[test]
    fn hessvec_matches_gradient_differences() {
        for f in 1..=3u32 {
            for k in 0..5 {
                fd_hessian_check(f, [60.0, 5.0, 4.0, -2.0], 40 + (f as u64) * 10 + k);
            }
        }
    }

    #[test]
    fn hessvec_zero_and_linear_part() {
        let m = model(2, [50.0, 3.0, -2.0, 0.0], 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = rand_state(&mut rng, 8, 5);
        let ctx = m.hess_context(&x);
        let z = StateField::zeros(8, 5);
        let h = m.hessvec(&ctx, &z);
        assert!(h.data.iter().all(|v| v.norm() == 0.0));

        // all beta = 0: H[Z] = LZ + 2VZ + 2ZB independent of X
        let grid = Grid::uniform(-4.0, 4.0, 8, 1).unwrap();
        let spec = PotentialSpec {
            harmonic: vec![1.0],
            lattice_amp: vec![0.0],
            lattice_period: vec![1.0],
        };
        let m0 = EnergyModel::new(
            grid,
            SpinAlgebra::new(2).unwrap(),
            params([0.0; 4], 0.2, 0.1, 0.0),
            &spec,
        )
        .unwrap();
        let z = rand_state(&mut rng, 8, 5);
        let ctx0 = m0.hess_context(&x);
        let h0 = m0.hessvec(&ctx0, &z);
        let g_of_z_half = m0.euclidean_gradient(&z);
        let mut err = 0.0f64;
        for (a, b) in h0.data.iter().zip(&g_of_z_half.data) {
            err = err.max((a - b).norm());
        }
        // for a quadratic energy the gradient is the (linear) Hessian applied
        // to the argument
        assert!(err < 1e-12);
    }

    #[test]
    fn hessian_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for f in 1..=3u32 {
            let m = model(f, [70.0, 6.0, 5.0, 2.0], 8);
            let x = rand_state(&mut rng, 8, m.ncomp());
            let z1 = rand_state(&mut rng, 8, m.ncomp());
            let z2 = rand_state(&mut rng, 8, m.ncomp());
            let ctx = m.hess_context(&x);
            let h1 = m.hessvec(&ctx, &z1);
            let h2 = m.hessvec(&ctx, &z2);
            let a = h1.dot_re(&z2);
            let b = z1.dot_re(&h2);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "F={f}: {a} vs {b}");
        }
    }

    #[test]
    fn gauge_invariance_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for f in 1..=3u32 {
            let m = model(f, [30.0, 2.0, -4.0, 1.0], 8);
            let x = rand_state(&mut rng, 8, m.ncomp());
            let e0 = m.energy(&x).unwrap();
            let phase = Complex64::new(0.0, 0.77).exp();
            let mut xp = x.clone();
            for v in xp.data.iter_mut() {
                *v *= phase;
            }
            let e1 = m.energy(&xp).unwrap();
            assert!((e0 - e1).abs() <= 1e-12 * e0.abs().max(1.0), "F={f}");
        }
    }

    #[test]
    fn component_flip_symmetry() {
        // reversing l <-> -l and negating p preserves the energy
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for f in 1..=3u32 {
            let grid = Grid::uniform(-4.0, 4.0, 8, 1).unwrap();
            let spec = PotentialSpec {
                harmonic: vec![1.0],
                lattice_amp: vec![2.0],
                lattice_period: vec![2.0],
            };
            let pa = params([25.0, 3.0, -2.0, 1.0], 0.4, 0.2, 0.0);
            let mut pb = pa;
            pb.p = -pa.p;
            let ma = EnergyModel::new(
                grid.clone(),
                SpinAlgebra::new(f).unwrap(),
                pa,
                &spec,
            )
            .unwrap();
            let mb =
                EnergyModel::new(grid, SpinAlgebra::new(f).unwrap(), pb, &spec).unwrap();
            let x = rand_state(&mut rng, 8, ma.ncomp());
            let mut flipped = StateField::zeros(8, ma.ncomp());
            for b in 0..ma.ncomp() {
                let src = x.component(ma.ncomp() - 1 - b).to_vec();
                flipped.component_mut(b).copy_from_slice(&src);
            }
            let ea = ma.energy(&x).unwrap();
            let eb = mb.energy(&flipped).unwrap();
            assert!((ea - eb).abs() <= 1e-12 * ea.abs().max(1.0), "F={f}");
        }
    }

    #[test]
    fn initial_mixtures_match_reference() {
        let u = initial_mixture(1, 0.0, InitRegime::Antiferromagnetic, 0).unwrap();
        let want = (0.5f64).sqrt();
        assert!((u[0] - want).abs() < 1e-15 && u[1] == 0.0 && (u[2] - want).abs() < 1e-15);

        let u = initial_mixture(2, 0.0, InitRegime::Nematic, 0).unwrap();
        assert!((u[0] - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(&u[1..4], &[0.0, 0.0, 0.0]);
        assert!((u[4] - 2f64.sqrt() / 2.0).abs() < 1e-15);

        // mixtures carry unit mass and magnetization M
        for (f, regime, m) in [
            (1, InitRegime::Ferromagnetic, 0.5),
            (1, InitRegime::Antiferromagnetic, -0.3),
            (2, InitRegime::Ferromagnetic, 1.5),
            (2, InitRegime::Cyclic, 0.5),
            (2, InitRegime::Nematic, 1.2),
        ] {
            let u = initial_mixture(f, m, regime, 0).unwrap();
            let mass: f64 = u.iter().map(|v| v * v).sum();
            let mag: f64 = u
                .iter()
                .enumerate()
                .map(|(b, v)| (f as f64 - b as f64) * v * v)
                .sum();
            assert!((mass - 1.0).abs() < 1e-14, "F={f} {regime:?}");
            assert!((mag - m).abs() < 1e-14, "F={f} {regime:?}");
        }
    }

    #[test]
    fn initial_mixture_rejects_large_m() {
        assert!(initial_mixture(1, 1.0, InitRegime::Ferromagnetic, 0).is_err());
        assert!(initial_mixture(3, -3.2, InitRegime::Random, 0).is_err());
    }

    #[test]
    fn spin3_random_mixture_is_seeded() {
        let a = initial_mixture(3, 0.5, InitRegime::Random, 42).unwrap();
        let b = initial_mixture(3, 0.5, InitRegime::Random, 42).unwrap();
        let c = initial_mixture(3, 0.5, InitRegime::Random, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&v| (0.0..1.0).contains(&v)));
    }
}
