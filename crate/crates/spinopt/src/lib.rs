//! Ground states of spin-1, spin-2 and spin-3 Bose-Einstein condensates.
//!
//! The Gross-Pitaevskii energy is discretized with a Fourier pseudospectral
//! scheme on a periodic box and minimized over the manifold of states with
//! unit mass and fixed magnetization. Minimization runs a Riemannian
//! gradient method with Barzilai-Borwein steps to warm-start an adaptive
//! regularized Newton iteration, accelerated by cascadic mesh refinement;
//! three interchangeable retractions (projective, orthogonal, closed-form)
//! map trial steps back onto the constraint set.
//!
//! Quick start:
//!
//! ```no_run
//! use spinopt::config::RunConfig;
//! use spinopt::solver::{cascadic_solve, SolverConfig};
//!
//! let cfg = RunConfig::from_preset("spin2-1d-case2").unwrap();
//! let (problem, u, report) = cascadic_solve(
//!     &cfg.problem_spec().unwrap(),
//!     &cfg.solver_config().unwrap(),
//!     &mut |_rec| {},
//! )
//! .unwrap();
//! println!("energy {:.6}", report.final_energy);
//! # let _ = (problem, u);
//! ```
//!
//! The `examples/` directory holds one runnable program per capability
//! (`cargo run --release --example <name>`); the `spinopt` binary wraps the
//! same calls behind `solve`/`presets`/`check` subcommands.

pub mod config;
pub mod energy;
pub mod error;
pub mod grid;
pub mod manifold;
pub mod presets;
pub mod problem;
pub mod retract;
pub mod run;
pub mod solver;
pub mod spin;

pub use error::{Error, Result};
