//! Catalog of the benchmark configurations: spin-1 lattice traps in 2D/3D,
//! the three spin-2 interaction cases and the two spin-3 cases in 1D/2D/3D.
//! Each preset pins the domain, grid size, interaction strengths, trapping
//! potential and initial-data regime; magnetization defaults to the first
//! tabulated value and is meant to be overridden per run.

use crate::config::{InitChoice, RunConfig};
use crate::energy::{InitRegime, PotentialSpec};
use crate::grid::Axis;
use crate::solver::SolverConfig;

/// One catalog entry. `axes` holds `dim` (a, b, n) triples.
#[derive(Clone, Copy, Debug)]
pub struct Preset {
    pub id: &'static str,
    pub f: u32,
    pub dim: usize,
    pub axes: [(f64, f64, usize); 3],
    pub beta: [f64; 4],
    pub harmonic: f64,
    pub lattice_amp: f64,
    pub lattice_period: f64,
    pub regime: InitRegime,
    /// Magnetizations tabulated for this configuration.
    pub table_m: &'static [f64],
}

const M3: &[f64] = &[0.0, 0.5, 1.5];
const M4: &[f64] = &[0.0, 0.2, 0.5, 0.9];

const CASE1_SPIN2: [f64; 4] = [130.6, -25.4, -125.3, 0.0];
const CASE2_SPIN2: [f64; 4] = [243.0, 12.1, -13.0, 0.0];
const CASE3_SPIN2: [f64; 4] = [183.9, 26.8, 134.7, 0.0];
const CASE1_SPIN3: [f64; 4] = [100.0, 1.0, -10.0, -1.0];
const CASE2_SPIN3: [f64; 4] = [100.0, 1.0, 10.0, 1.0];

const SYM8_256: [(f64, f64, usize); 3] = [(-8.0, 8.0, 256); 3];
const SYM8_128: [(f64, f64, usize); 3] = [(-8.0, 8.0, 128); 3];
const SYM16_256: [(f64, f64, usize); 3] = [(-16.0, 16.0, 256); 3];
const SYM16_512: [(f64, f64, usize); 3] = [(-16.0, 16.0, 512); 3];

const PRESETS: &[Preset] = &[
    Preset {
        id: "spin1-2d",
        f: 1,
        dim: 2,
        axes: SYM16_512,
        beta: [300.0, 100.0, 0.0, 0.0],
        harmonic: 1.0,
        lattice_amp: 10.0,
        lattice_period: 2.0,
        regime: InitRegime::Antiferromagnetic,
        table_m: M4,
    },
    Preset {
        id: "spin1-3d",
        f: 1,
        dim: 3,
        axes: SYM16_256,
        beta: [880.0, -4.1, 0.0, 0.0],
        harmonic: 1.0,
        lattice_amp: 100.0,
        lattice_period: 2.0,
        regime: InitRegime::Ferromagnetic,
        table_m: M4,
    },
    Preset {
        id: "spin2-1d-case1",
        f: 2,
        dim: 1,
        axes: SYM8_256,
        beta: CASE1_SPIN2,
        harmonic: 1.0,
        lattice_amp: 25.0,
        lattice_period: 4.0,
        regime: InitRegime::Ferromagnetic,
        table_m: M3,
    },
    Preset {
        id: "spin2-1d-case2",
        f: 2,
        dim: 1,
        axes: SYM16_512,
        beta: CASE2_SPIN2,
        harmonic: 1.0,
        lattice_amp: 25.0,
        lattice_period: 4.0,
        regime: InitRegime::Nematic,
        table_m: M3,
    },
    Preset {
        id: "spin2-1d-case3",
        f: 2,
        dim: 1,
        axes: SYM16_512,
        beta: CASE3_SPIN2,
        harmonic: 1.0,
        lattice_amp: 25.0,
        lattice_period: 4.0,
        regime: InitRegime::Cyclic,
        table_m: M3,
    },
    Preset {
        id: "spin2-2d-case1",
        f: 2,
        dim: 2,
        axes: SYM8_256,
        beta: CASE1_SPIN2,
        harmonic: 1.0,
        lattice_amp: 10.0,
        lattice_period: 2.0,
        regime: InitRegime::Ferromagnetic,
        table_m: M3,
    },
    Preset {
        id: "spin2-2d-case2",
        f: 2,
        dim: 2,
        axes: SYM8_256,
        beta: CASE2_SPIN2,
        harmonic: 1.0,
        lattice_amp: 10.0,
        lattice_period: 2.0,
        regime: InitRegime::Nematic,
        table_m: M3,
    },
    Preset {
        id: "spin2-2d-case3",
        f: 2,
        dim: 2,
        axes: SYM8_256,
        beta: CASE3_SPIN2,
        harmonic: 1.0,
        lattice_amp: 10.0,
        lattice_period: 2.0,
        regime: InitRegime::Cyclic,
        table_m: M3,
    },
    Preset {
        id: "spin2-3d-case1",
        f: 2,
        dim: 3,
        axes: [(-8.0, 8.0, 128), (-16.0, 16.0, 128), (-16.0, 16.0, 128)],
        beta: CASE1_SPIN2,
        harmonic: 1.0,
        lattice_amp: 100.0,
        lattice_period: 2.0,
        regime: InitRegime::Ferromagnetic,
        table_m: M3,
    },
    Preset {
        id: "spin2-3d-case2",
        f: 2,
        dim: 3,
        axes: SYM16_256,
        beta: CASE2_SPIN2,
        harmonic: 1.0,
        lattice_amp: 100.0,
        lattice_period: 2.0,
        regime: InitRegime::Nematic,
        table_m: M3,
    },
    Preset {
        id: "spin2-3d-case3",
        f: 2,
        dim: 3,
        axes: SYM16_256,
        beta: CASE3_SPIN2,
        harmonic: 1.0,
        lattice_amp: 100.0,
        lattice_period: 2.0,
        regime: InitRegime::Cyclic,
        table_m: M3,
    },
    Preset {
        id: "spin3-1d-case1",
        f: 3,
        dim: 1,
        axes: SYM8_256,
        beta: CASE1_SPIN3,
        harmonic: 1.0,
        lattice_amp: 25.0,
        lattice_period: 4.0,
        regime: InitRegime::Random,
        table_m: M3,
    },
    Preset {
        id: "spin3-1d-case2",
        f: 3,
        dim: 1,
        axes: SYM8_256,
        beta: CASE2_SPIN3,
        harmonic: 1.0,
        lattice_amp: 25.0,
        lattice_period: 4.0,
        regime: InitRegime::Random,
        table_m: M3,
    },
    Preset {
        id: "spin3-2d-case1",
        f: 3,
        dim: 2,
        axes: SYM8_256,
        beta: CASE1_SPIN3,
        harmonic: 1.0,
        lattice_amp: 10.0,
        lattice_period: 2.0,
        regime: InitRegime::Random,
        table_m: M3,
    },
    Preset {
        id: "spin3-2d-case2",
        f: 3,
        dim: 2,
        axes: SYM8_256,
        beta: CASE2_SPIN3,
        harmonic: 1.0,
        lattice_amp: 10.0,
        lattice_period: 2.0,
        regime: InitRegime::Random,
        table_m: M3,
    },
    Preset {
        id: "spin3-3d-case1",
        f: 3,
        dim: 3,
        axes: SYM8_128,
        beta: CASE1_SPIN3,
        harmonic: 1.0,
        lattice_amp: 100.0,
        lattice_period: 2.0,
        regime: InitRegime::Random,
        table_m: M3,
    },
    Preset {
        id: "spin3-3d-case2",
        f: 3,
        dim: 3,
        axes: SYM8_128,
        beta: CASE2_SPIN3,
        harmonic: 1.0,
        lattice_amp: 100.0,
        lattice_period: 2.0,
        regime: InitRegime::Random,
        table_m: M3,
    },
];

pub fn all() -> &'static [Preset] {
    PRESETS
}

pub fn find(id: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.id == id)
}

impl Preset {
    /// Expand into a full run configuration (first tabulated M, default
    /// solver parameters).
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            preset: Some(self.id.to_string()),
            spin: self.f,
            axes: self.axes[..self.dim]
                .iter()
                .map(|&(a, b, n)| Axis { a, b, n })
                .collect(),
            magnetization: self.table_m[0],
            beta: self.beta,
            p: 0.0,
            q: 0.0,
            potential: PotentialSpec {
                harmonic: vec![self.harmonic; self.dim],
                lattice_amp: vec![self.lattice_amp; self.dim],
                lattice_period: vec![self.lattice_period; self.dim],
            },
            init: InitChoice::Explicit(self.regime),
            seed: 42,
            solver: SolverConfig::default(),
            out_dir: None,
            dump_full: false,
        }
    }

    /// One catalog line: id, spin, dimension, interactions, tabulated M.
    pub fn describe(&self) -> String {
        let beta = if self.f == 3 {
            format!(
                "beta = ({}, {}, {}, {})",
                self.beta[0], self.beta[1], self.beta[2], self.beta[3]
            )
        } else {
            format!("beta = ({}, {}, {})", self.beta[0], self.beta[1], self.beta[2])
        };
        let ms = self
            .table_m
            .iter()
            .map(|m| format!("{m}"))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "{:<16} F={} {}D n={:<4} {:<42} init={:<17} M in {{{}}}",
            self.id,
            self.f,
            self.dim,
            self.axes[0].2,
            beta,
            self.regime.name(),
            ms
        )
    }
}

/// The full catalog as text, one line per preset.
pub fn catalog() -> String {
    let mut s = String::new();
    for p in PRESETS {
        s.push_str(&p.describe());
        s.push('\n');
    }
    s
}
