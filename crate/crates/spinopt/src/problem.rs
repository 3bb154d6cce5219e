//! The assembled discrete minimization problem: energy model plus manifold,
//! with all evaluations exposed on the real embedding that the optimizers
//! work in.

use crate::energy::{
    initial_mixture, initial_profile, EnergyModel, HessContext, InitRegime, PotentialSpec,
    StateField,
};
use crate::error::Result;
use crate::grid::{Axis, Grid};
use crate::manifold::Manifold;
use crate::retract::retract_projective;
use crate::spin::{InteractionParams, SpinAlgebra};

/// Everything needed to build the discrete problem on any grid level.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub f: u32,
    pub params: InteractionParams,
    pub potential: PotentialSpec,
    pub axes: Vec<Axis>,
    pub regime: InitRegime,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate(self.f)?;
        self.potential.validate(self.axes.len())?;
        Grid::new(self.axes.clone()).map(|_| ())
    }

    /// Axes coarsened by the given power of two.
    pub fn axes_at_level(&self, halvings: u32) -> Vec<Axis> {
        self.axes
            .iter()
            .map(|ax| Axis { a: ax.a, b: ax.b, n: ax.n >> halvings })
            .collect()
    }
}

/// Discrete problem bound to one grid level.
pub struct Problem {
    pub model: EnergyModel,
    pub manifold: Manifold,
}

impl Problem {
    pub fn new(spec: &ProblemSpec, axes: Vec<Axis>) -> Result<Self> {
        let grid = Grid::new(axes)?;
        let algebra = SpinAlgebra::new(spec.f)?;
        let manifold = Manifold::new(spec.f, grid.npts(), spec.params.m)?;
        let model = EnergyModel::new(grid, algebra, spec.params, &spec.potential)?;
        Ok(Problem { model, manifold })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.model.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    /// Feasible initial state: Gaussian profile times the regime mixture,
    /// projected onto the constraint set.
    pub fn initial_state(&self, spec: &ProblemSpec) -> Result<Vec<f64>> {
        let mix = initial_mixture(spec.f, spec.params.m, spec.regime, spec.seed)?;
        let x = initial_profile(self.grid(), &mix);
        let w = self.manifold.embed(&x);
        retract_projective(&self.manifold, &w)
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let x = self.manifold.unembed(u);
        self.model.energy(&x)
    }

    /// Energy and embedded Euclidean gradient in one evaluation.
    pub fn energy_and_grad(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let x = self.manifold.unembed(u);
        let (e, g) = self.model.energy_and_gradient(&x)?;
        Ok((e, self.manifold.embed(&g)))
    }

    pub fn euclid_grad(&self, u: &[f64]) -> Vec<f64> {
        let x = self.manifold.unembed(u);
        self.manifold.embed(&self.model.euclidean_gradient(&x))
    }

    pub fn hess_context(&self, u: &[f64]) -> HessContext {
        let x = self.manifold.unembed(u);
        self.model.hess_context(&x)
    }

    /// Embedded Euclidean Hessian-vector product at the context's anchor.
    pub fn euclid_hessvec(&self, ctx: &HessContext, z: &[f64]) -> Vec<f64> {
        let zf = self.manifold.unembed(z);
        self.manifold.embed(&self.model.hessvec(ctx, &zf))
    }

    pub fn unembed(&self, u: &[f64]) -> StateField {
        self.manifold.unembed(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_1d(f: u32, m: f64, n: usize) -> ProblemSpec {
        ProblemSpec {
            f,
            params: InteractionParams {
                beta0: 100.0,
                beta1: 10.0,
                beta2: if f >= 2 { -5.0 } else { 0.0 },
                beta3: if f == 3 { 1.0 } else { 0.0 },
                p: 0.0,
                q: 0.0,
                m,
            },
            potential: PotentialSpec {
                harmonic: vec![1.0],
                lattice_amp: vec![0.0],
                lattice_period: vec![1.0],
            },
            axes: vec![Axis { a: -8.0, b: 8.0, n }],
            regime: InitRegime::Antiferromagnetic,
            seed: 42,
        }
    }

    #[test]
    fn initial_state_is_feasible() {
        for f in 1..=3u32 {
            let mut spec = spec_1d(f, 0.4, 32);
            spec.regime = if f == 3 { InitRegime::Random } else { InitRegime::Antiferromagnetic };
            let p = Problem::new(&spec, spec.axes.clone()).unwrap();
            let u = p.initial_state(&spec).unwrap();
            let (r0, r1) = p.manifold.constraint_residuals(&u);
            assert!(r0.abs() < 1e-12, "F={f}: mass residual {r0:.2e}");
            assert!(r1.abs() < 1e-12, "F={f}: magnetization residual {r1:.2e}");
        }
    }

    #[test]
    fn real_gradient_consistent_with_energy() {
        let spec = spec_1d(2, 0.7, 16);
        let p = Problem::new(&spec, spec.axes.clone()).unwrap();
        let u = p.initial_state(&spec).unwrap();
        let (e, g) = p.energy_and_grad(&u).unwrap();
        assert!(e.is_finite());
        // finite difference along a random direction in the embedding
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let d: Vec<f64> = (0..u.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = 1e-6;
        let up: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
        let um: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - t * b).collect();
        let fd = (p.energy(&up).unwrap() - p.energy(&um).unwrap()) / (2.0 * t);
        let want: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        assert!((fd - want).abs() <= 1e-5 * want.abs().max(1.0), "fd {fd} vs {want}");
    }
}
