//! Thin command-line front end: `solve`, `presets` and `check`.
//!
//! Exit codes: 0 converged, 2 iteration cap reached, 3 configuration
//! error, 4 numerical failure.

use clap::{Parser, Subcommand};
use spinopt::config::RunConfig;
use spinopt::error::Error;
use spinopt::retract::Retraction;
use spinopt::{presets, run};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spinopt", about = "Spin-F condensate ground states on the constraint manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured problem and write trace/state/slice/summary files.
    Solve {
        /// Path to a flat config file (omit when using --preset).
        config: Option<PathBuf>,
        /// Start from a catalog preset instead of a config file.
        #[arg(long)]
        preset: Option<String>,
        /// Override the retraction.
        #[arg(long, value_parser = ["projective", "orthogonal", "closedform"])]
        retraction: Option<String>,
        /// Override the number of multigrid levels.
        #[arg(long)]
        levels: Option<usize>,
        /// Override the target magnetization M.
        #[arg(long, allow_hyphen_values = true)]
        magnetization: Option<f64>,
        /// Override the RNG seed for random initial data.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default from config, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run one solve per listed magnetization, e.g. --sweep M=0,0.5,1.5.
        #[arg(long)]
        sweep: Option<String>,
        /// After solving, re-solve with -M and verify the reversal symmetry.
        #[arg(long)]
        reversal_check: bool,
    },
    /// Print the preset catalog.
    Presets,
    /// Validate a config file without solving.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(4),
            }
        }
    }
}

fn dispatch() -> spinopt::Result<ExitCode> {
    match Cli::parse().command {
        Command::Presets => {
            print!("{}", presets::catalog());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { config } => {
            let text = std::fs::read_to_string(&config)?;
            RunConfig::parse(&text)?.validate()?;
            println!("ok: {}", config.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            config,
            preset,
            retraction,
            levels,
            magnetization,
            seed,
            out,
            sweep,
            reversal_check,
        } => {
            let mut cfg = match (&config, &preset) {
                (Some(path), None) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
                (None, Some(id)) => RunConfig::from_preset(id)?,
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "give either a config file or --preset, not both \
                         (a config file can set `preset = ...` itself)"
                            .into(),
                    ));
                }
                (None, None) => {
                    return Err(Error::Config(
                        "solve needs a config file or --preset <id>".into(),
                    ));
                }
            };
            if let Some(r) = retraction {
                cfg.solver.retraction = Retraction::parse(&r)?;
            }
            if let Some(l) = levels {
                cfg.solver.levels = l;
            }
            if let Some(m) = magnetization {
                cfg.magnetization = m;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out_dir = out
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            cfg.validate()?;

            if let Some(sweep) = sweep {
                let m_values = parse_sweep(&sweep)?;
                let results = run::execute_sweep(&cfg, &m_values, &out_dir)?;
                let mut all_converged = true;
                for (m, oc) in &results {
                    println!(
                        "M = {m:>5}: energy = {:.6}, gradnorm = {:.3e}, converged = {}, {:.1}s",
                        oc.energy, oc.grad_norm, oc.converged, oc.wall_time_s
                    );
                    all_converged &= oc.converged;
                }
                return Ok(if all_converged { ExitCode::SUCCESS } else { ExitCode::from(2) });
            }

            if reversal_check {
                let rep = run::reversal_check(&cfg, &out_dir)?;
                println!(
                    "reversal check: E(M) = {:.10}, E(-M) = {:.10}, |dE| = {:.3e}, \
                     component mismatch = {:.3e} -> {}",
                    rep.energy_forward,
                    rep.energy_reversed,
                    (rep.energy_forward - rep.energy_reversed).abs(),
                    rep.max_component_mismatch,
                    if rep.passed { "ok" } else { "FAILED" }
                );
                return Ok(if rep.passed { ExitCode::SUCCESS } else { ExitCode::from(4) });
            }

            let outcome = run::execute(&cfg, &out_dir)?;
            println!(
                "energy = {:.10}\ngradnorm = {:.3e}\nconverged = {}\nwall_time_s = {:.1}\nout = {}",
                outcome.energy,
                outcome.grad_norm,
                outcome.converged,
                outcome.wall_time_s,
                outcome.out_dir.display()
            );
            Ok(if outcome.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn parse_sweep(s: &str) -> spinopt::Result<Vec<f64>> {
    let list = s.strip_prefix("M=").unwrap_or(s);
    let vals: std::result::Result<Vec<f64>, _> =
        list.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| Error::Config(format!("cannot parse sweep list '{s}'")))?;
    if vals.is_empty() {
        return Err(Error::Config("empty sweep list".into()));
    }
    Ok(vals)
}
