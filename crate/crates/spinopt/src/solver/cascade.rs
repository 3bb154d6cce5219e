//! Cascadic multigrid driver: solve on the coarsest grid, prolongate the
//! minimizer to the next finer grid, re-solve, and never cycle back down.
//! Each level runs the RGBB warm start followed by the regularized Newton
//! iteration; the finest level uses the tight gradient tolerance.

use super::{arnt, rgbb, IterRecord, LevelSummary, Phase, RunReport, SolverConfig};
use crate::energy::StateField;
use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::problem::{Problem, ProblemSpec};
use crate::retract::retract_projective;
use std::time::Instant;

/// Grid schedule coarse -> fine. Every axis must divide by 2^(levels-1)
/// and the coarsest level must keep at least `coarsest_min_n` points.
pub(crate) fn plan_levels(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Vec<Vec<Axis>>> {
    let halvings = (cfg.levels - 1) as u32;
    for ax in &spec.axes {
        let div = 1usize << halvings;
        if ax.n % div != 0 {
            return Err(Error::Config(format!(
                "axis n = {} does not support {} levels (not divisible by {div})",
                ax.n, cfg.levels
            )));
        }
        if ax.n / div < cfg.coarsest_min_n {
            return Err(Error::Config(format!(
                "coarsest level would have n = {} < {} points per axis",
                ax.n / div,
                cfg.coarsest_min_n
            )));
        }
    }
    Ok((0..cfg.levels).map(|j| spec.axes_at_level(halvings - j as u32)).collect())
}

/// Largest level count (up to `max_levels`) that the axes admit.
pub fn feasible_levels(axes: &[Axis], max_levels: usize, coarsest_min_n: usize) -> usize {
    let mut levels = 1usize;
    while levels < max_levels {
        let div = 1usize << levels;
        if axes.iter().all(|ax| ax.n % div == 0 && ax.n / div >= coarsest_min_n) {
            levels += 1;
        } else {
            break;
        }
    }
    levels
}

pub fn cascadic_solve(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    callback: &mut dyn FnMut(&IterRecord),
) -> Result<(Problem, Vec<f64>, RunReport)> {
    cfg.validate()?;
    spec.validate()?;
    let schedule = plan_levels(spec, cfg)?;
    let started = Instant::now();

    let mut report = RunReport::default();
    let mut current: Option<(Problem, Vec<f64>)> = None;
    let mut converged = false;

    for (level, axes) in schedule.iter().enumerate() {
        let problem = Problem::new(spec, axes.clone())?;
        let u0 = match current.take() {
            None => problem.initial_state(spec)?,
            Some((coarse, cu)) => {
                let xc = coarse.unembed(&cu);
                let scale =
                    (problem.grid().cell_volume() / coarse.grid().cell_volume()).sqrt();
                let mut xf = StateField::zeros(problem.grid().npts(), xc.ncomp);
                for b in 0..xc.ncomp {
                    let fine = coarse.grid().prolongate(problem.grid(), xc.component(b))?;
                    for (dst, v) in xf.component_mut(b).iter_mut().zip(fine) {
                        *dst = v * scale;
                    }
                }
                let w = problem.manifold.embed(&xf);
                retract_projective(&problem.manifold, &w)?
            }
        };

        let is_finest = level + 1 == schedule.len();
        let level_tol = if is_finest { cfg.grad_tol } else { cfg.grad_tol_coarse };

        let mut summary = LevelSummary {
            level,
            n: axes.iter().map(|ax| ax.n).collect(),
            ..LevelSummary::default()
        };

        let mut records: Vec<IterRecord> = Vec::new();
        let mut sink = |rec: &IterRecord| {
            records.push(rec.clone());
            callback(rec);
        };

        // warm start, then the Newton phase to the level tolerance
        let warm = match rgbb(
            &problem,
            &u0,
            cfg.rgbb_warm_tol,
            cfg.rgbb_warm_max_iters,
            cfg.retraction,
            cfg,
            level,
            &mut sink,
        ) {
            Ok(out) => out,
            Err(Error::Stagnation { grad_norm, best }) => {
                report.notes.push(format!(
                    "level {level}: RGBB stagnated at gradient norm {grad_norm:.3e}; \
                     continuing with its best iterate"
                ));
                let u = best.0;
                let (energy, _) = problem.energy_and_grad(&u).map_err(|e| annotate(e, level))?;
                super::PhaseOutcome { u, energy, grad_norm, iters: 0, converged: false }
            }
            Err(err) => return Err(annotate(err, level)),
        };

        let out = arnt(
            &problem,
            &warm.u,
            level_tol,
            cfg.max_outer,
            cfg.retraction,
            cfg,
            level,
            &mut sink,
        )
        .map_err(|e| annotate(e, level))?;

        for rec in &records {
            match rec.phase {
                Phase::Rgbb => summary.rgbb_iters += 1,
                Phase::Arnt => {
                    summary.arnt_iters += 1;
                    summary.total_inner += rec.inner_iters;
                }
            }
        }
        summary.final_energy = out.energy;
        summary.final_grad_norm = out.grad_norm;
        report.records.extend(records);
        report.levels.push(summary);
        report.final_energy = out.energy;
        report.final_grad_norm = out.grad_norm;
        converged = out.converged;
        current = Some((problem, out.u));
    }

    report.converged = converged;
    report.wall_time = started.elapsed();
    let (problem, u) = current.expect("at least one level");
    Ok((problem, u, report))
}

fn annotate(err: Error, level: usize) -> Error {
    match err {
        Error::Stagnation { grad_norm, best } => Error::Stagnation { grad_norm, best },
        Error::Numerical(msg) => Error::Numerical(format!("level {level}: {msg}")),
        Error::RootSolve(msg) => Error::RootSolve(format!("level {level}: {msg}")),
        other => other,
    }
}
