//! Solve orchestration and result persistence: iteration traces, binary
//! state dumps, axis slices for plotting, and flat-text summaries.
//!
//! Files written per run:
//! * `trace.csv`   - iter,level,phase,energy,gradnorm,sigma
//! * `state.bin`   - binary wavefunction dump (format below)
//! * `slice.csv`   - per-component |phi_l| along the x (and y) center lines
//! * `summary.txt` - flat key = value run summary
//!
//! `state.bin` layout (little-endian): magic "SPGS", u32 version = 1,
//! u32 F, u32 dim, then per axis f64 a, f64 b, u64 n, then f64 M,
//! f64 energy, f64 gradnorm, then the wavefunction values phi_l(x_j)
//! without the sqrt(cell volume) scaling, component-major and row-major
//! over the grid, as (re, im) f64 pairs.

use crate::config::RunConfig;
use crate::energy::StateField;
use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::problem::Problem;
use crate::solver::{cascadic_solve, IterRecord, RunReport};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const DUMP_MAGIC: &[u8; 4] = b"SPGS";
const DUMP_VERSION: u32 = 1;

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub energy: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub outer_iters: usize,
    pub wall_time_s: f64,
    pub out_dir: PathBuf,
}

/// Solve the configured problem and persist all artifacts into `out_dir`.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let spec = cfg.problem_spec()?;
    let solver_cfg = cfg.solver_config()?;

    let trace_path = out_dir.join("trace.csv");
    let mut trace = BufWriter::new(File::create(&trace_path)?);
    writeln!(trace, "iter,level,phase,energy,gradnorm,sigma")?;

    let mut cb = |rec: &IterRecord| {
        let _ = writeln!(
            trace,
            "{},{},{},{:.16e},{:.9e},{:.9e}",
            rec.iter,
            rec.level,
            rec.phase.name(),
            rec.energy,
            rec.grad_norm,
            rec.sigma
        );
    };
    let (problem, u, report) = cascadic_solve(&spec, &solver_cfg, &mut cb)?;
    drop(cb);
    trace.flush()?;

    persist(cfg, &problem, &u, &report, out_dir)?;

    Ok(RunOutcome {
        energy: report.final_energy,
        grad_norm: report.final_grad_norm,
        converged: report.converged,
        outer_iters: report.records.len(),
        wall_time_s: report.wall_time.as_secs_f64(),
        out_dir: out_dir.to_path_buf(),
    })
}

/// Write state.bin, slice.csv and summary.txt for a finished solve.
pub fn persist(
    cfg: &RunConfig,
    problem: &Problem,
    u: &[f64],
    report: &RunReport,
    out_dir: &Path,
) -> Result<()> {
    let x = problem.unembed(u);
    write_state_dump(
        &out_dir.join("state.bin"),
        problem,
        &x,
        report.final_energy,
        report.final_grad_norm,
    )?;
    write_slices(&out_dir.join("slice.csv"), problem, &x)?;
    write_summary(cfg, report, &out_dir.join("summary.txt"))?;
    Ok(())
}

fn write_summary(cfg: &RunConfig, report: &RunReport, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    if let Some(p) = &cfg.preset {
        writeln!(f, "preset = {p}")?;
    }
    writeln!(f, "spin = {}", cfg.spin)?;
    writeln!(f, "dim = {}", cfg.axes.len())?;
    writeln!(f, "magnetization = {}", cfg.magnetization)?;
    writeln!(f, "retraction = {}", cfg.solver.retraction.name())?;
    writeln!(f, "levels = {}", cfg.solver.levels)?;
    writeln!(f, "seed = {}", cfg.seed)?;
    writeln!(f, "final_energy = {:.10}", report.final_energy)?;
    writeln!(f, "final_grad_norm = {:.6e}", report.final_grad_norm)?;
    writeln!(f, "outer_iters = {}", report.records.len())?;
    writeln!(f, "converged = {}", report.converged)?;
    writeln!(f, "wall_time_s = {:.3}", report.wall_time.as_secs_f64())?;
    for lvl in &report.levels {
        writeln!(
            f,
            "level{} = n={:?} rgbb={} arnt={} avg_inner={:.1} energy={:.10} gradnorm={:.3e}",
            lvl.level,
            lvl.n,
            lvl.rgbb_iters,
            lvl.arnt_iters,
            lvl.avg_inner(),
            lvl.final_energy,
            lvl.final_grad_norm
        )?;
    }
    for note in &report.notes {
        writeln!(f, "note = {note}")?;
    }
    f.flush()?;
    Ok(())
}

fn write_state_dump(
    path: &Path,
    problem: &Problem,
    x: &StateField,
    energy: f64,
    grad_norm: f64,
) -> Result<()> {
    let grid = problem.grid();
    let scale = 1.0 / grid.cell_volume().sqrt();
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(DUMP_MAGIC)?;
    f.write_all(&DUMP_VERSION.to_le_bytes())?;
    f.write_all(&problem.manifold.f.to_le_bytes())?;
    f.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for ax in grid.axes() {
        f.write_all(&ax.a.to_le_bytes())?;
        f.write_all(&ax.b.to_le_bytes())?;
        f.write_all(&(ax.n as u64).to_le_bytes())?;
    }
    f.write_all(&problem.manifold.mag.to_le_bytes())?;
    f.write_all(&energy.to_le_bytes())?;
    f.write_all(&grad_norm.to_le_bytes())?;
    for b in 0..x.ncomp {
        for z in x.component(b) {
            f.write_all(&(z.re * scale).to_le_bytes())?;
            f.write_all(&(z.im * scale).to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Parsed contents of a `state.bin` dump. `phi` holds the raw wavefunction
/// values (no quadrature scaling).
#[derive(Clone, Debug)]
pub struct StateDump {
    pub f: u32,
    pub axes: Vec<Axis>,
    pub m: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub phi: StateField,
}

impl StateDump {
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|ax| ax.h()).product()
    }

    /// Trapezoidal mass integral of sum_l |phi_l|^2.
    pub fn mass(&self) -> f64 {
        self.phi.mass() * self.cell_volume()
    }

    /// Trapezoidal magnetization integral.
    pub fn magnetization(&self) -> f64 {
        self.phi.magnetization(self.f) * self.cell_volume()
    }
}

pub fn read_state_dump(path: &Path) -> Result<StateDump> {
    let mut f = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Config(format!("{}: not a state dump", path.display())));
    }
    let version = read_u32(&mut f)?;
    if version != DUMP_VERSION {
        return Err(Error::Config(format!("unsupported dump version {version}")));
    }
    let spin = read_u32(&mut f)?;
    let dim = read_u32(&mut f)? as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Config(format!("corrupt dump: dim = {dim}")));
    }
    let mut axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let a = read_f64(&mut f)?;
        let b = read_f64(&mut f)?;
        let n = read_u64(&mut f)? as usize;
        axes.push(Axis { a, b, n });
    }
    let m = read_f64(&mut f)?;
    let energy = read_f64(&mut f)?;
    let grad_norm = read_f64(&mut f)?;
    let npts: usize = axes.iter().map(|ax| ax.n).product();
    let ncomp = (2 * spin + 1) as usize;
    let mut phi = StateField::zeros(npts, ncomp);
    for b in 0..ncomp {
        for z in phi.component_mut(b) {
            let re = read_f64(&mut f)?;
            let im = read_f64(&mut f)?;
            *z = num_complex::Complex64::new(re, im);
        }
    }
    // header grid product x (2F+1) x 2 must equal the payload float count
    let mut rest = Vec::new();
    f.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Config(format!(
            "dump has {} trailing bytes beyond the declared payload",
            rest.len()
        )));
    }
    Ok(StateDump { f: spin, axes, m, energy, grad_norm, phi })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// |phi_l| along the x center line (and y for 2D/3D), enough to regenerate
/// the usual line plots; remaining axes sit at the domain-center index n/2.
fn write_slices(path: &Path, problem: &Problem, x: &StateField) -> Result<()> {
    let grid = problem.grid();
    let scale = 1.0 / grid.cell_volume().sqrt();
    let dims: Vec<usize> = grid.axes().iter().map(|ax| ax.n).collect();
    let ncomp = x.ncomp;
    let span = problem.manifold.f as i64;

    let mut f = BufWriter::new(File::create(path)?);
    write!(f, "axis,coord")?;
    for l in (-span..=span).rev() {
        write!(f, ",abs_phi_{l}")?;
    }
    writeln!(f)?;

    let axis_count = if grid.dim() >= 2 { 2 } else { 1 };
    for axis in 0..axis_count {
        let name = ["x", "y"][axis];
        let coords = grid.coords(axis);
        for (i, &coord) in coords.iter().enumerate() {
            // flattened index with the other axes at their center
            let mut idx = 0usize;
            for a in 0..grid.dim() {
                let pos = if a == axis { i } else { dims[a] / 2 };
                idx = idx * dims[a] + pos;
            }
            write!(f, "{name},{coord}")?;
            for b in 0..ncomp {
                write!(f, ",{:.12e}", x.get(idx, b).norm() * scale)?;
            }
            writeln!(f)?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Read slice.csv back (test support and external tooling).
pub fn read_slices(path: &Path) -> Result<Vec<(String, f64, Vec<f64>)>> {
    let f = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let axis = parts.next().unwrap_or("").to_string();
        let coord: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Config(format!("bad slice row {i}")))?;
        let vals: Vec<f64> = parts.filter_map(|s| s.parse().ok()).collect();
        rows.push((axis, coord, vals));
    }
    Ok(rows)
}

/// Run one solve per magnetization value, each in its own subdirectory.
/// Solves are independent and run concurrently.
pub fn execute_sweep(cfg: &RunConfig, m_values: &[f64], out_dir: &Path) -> Result<Vec<(f64, RunOutcome)>> {
    std::fs::create_dir_all(out_dir)?;
    let results: Vec<(f64, Result<RunOutcome>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = m_values
            .iter()
            .map(|&m| {
                let mut sub = cfg.clone();
                sub.magnetization = m;
                let dir = out_dir.join(format!("M{m}"));
                scope.spawn(move || (m, execute(&sub, &dir)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(results.len());
    for (m, r) in results {
        out.push((m, r.map_err(|e| Error::Numerical(format!("M = {m}: {e}")))?));
    }
    Ok(out)
}

/// Outcome of the M <-> -M reversal consistency check.
#[derive(Clone, Debug)]
pub struct ReversalReport {
    pub energy_forward: f64,
    pub energy_reversed: f64,
    /// max_j | |phi_l(x_j)| - |phi'_{-l}(x_j)| | over components and points
    pub max_component_mismatch: f64,
    pub passed: bool,
}

/// Solve with M and with -M (negating the linear Zeeman shift) and compare:
/// the energies must agree and the component profiles must be reversals of
/// each other.
pub fn reversal_check(cfg: &RunConfig, out_dir: &Path) -> Result<ReversalReport> {
    let fwd = execute(cfg, &out_dir.join("forward"))?;
    let mut rev_cfg = cfg.clone();
    rev_cfg.magnetization = -cfg.magnetization;
    rev_cfg.p = -cfg.p;
    let rev = execute(&rev_cfg, &out_dir.join("reversed"))?;

    let a = read_state_dump(&out_dir.join("forward/state.bin"))?;
    let b = read_state_dump(&out_dir.join("reversed/state.bin"))?;
    let ncomp = a.phi.ncomp;
    let mut mismatch = 0.0f64;
    for comp in 0..ncomp {
        let ca = a.phi.component(comp);
        let cb = b.phi.component(ncomp - 1 - comp);
        for (za, zb) in ca.iter().zip(cb) {
            mismatch = mismatch.max((za.norm() - zb.norm()).abs());
        }
    }
    let de = (fwd.energy - rev.energy).abs();
    Ok(ReversalReport {
        energy_forward: fwd.energy,
        energy_reversed: rev.energy,
        max_component_mismatch: mismatch,
        passed: de <= 1e-8 * fwd.energy.abs().max(1.0),
    })
}
