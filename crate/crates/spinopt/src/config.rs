//! Run configuration: a flat, human-editable key = value format with
//! three sections ([problem], [solver], [output]), preset expansion and
//! fail-closed parsing (unknown keys or sections are errors).

use crate::energy::{InitRegime, PotentialSpec};
use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::presets;
use crate::problem::ProblemSpec;
use crate::retract::Retraction;
use crate::solver::SolverConfig;
use crate::spin::InteractionParams;
use std::path::PathBuf;

/// Initial-data regime: derived from the interaction signs or explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitChoice {
    Auto,
    Explicit(InitRegime),
}

impl InitChoice {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => InitChoice::Auto,
            "ferromagnetic" => InitChoice::Explicit(InitRegime::Ferromagnetic),
            "antiferromagnetic" => InitChoice::Explicit(InitRegime::Antiferromagnetic),
            "nematic" => InitChoice::Explicit(InitRegime::Nematic),
            "cyclic" => InitChoice::Explicit(InitRegime::Cyclic),
            "random" => InitChoice::Explicit(InitRegime::Random),
            other => {
                return Err(Error::Config(format!("unknown init regime '{other}'")));
            }
        })
    }

    fn name(&self) -> &'static str {
        match self {
            InitChoice::Auto => "auto",
            InitChoice::Explicit(r) => r.name(),
        }
    }
}

/// A fully described run: problem, solver parameters and output options.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub spin: u32,
    pub axes: Vec<Axis>,
    pub magnetization: f64,
    pub beta: [f64; 4],
    pub p: f64,
    pub q: f64,
    pub potential: PotentialSpec,
    pub init: InitChoice,
    pub seed: u64,
    pub solver: SolverConfig,
    pub out_dir: Option<PathBuf>,
    /// Export the full wavefunction volume in 3D (slice files are always written).
    pub dump_full: bool,
}

impl PartialEq for SolverConfig {
    fn eq(&self, other: &Self) -> bool {
        self.grad_tol == other.grad_tol
            && self.grad_tol_coarse == other.grad_tol_coarse
            && self.max_outer == other.max_outer
            && self.rgbb_warm_tol == other.rgbb_warm_tol
            && self.rgbb_warm_max_iters == other.rgbb_warm_max_iters
            && self.eta1 == other.eta1
            && self.eta2 == other.eta2
            && self.gamma0 == other.gamma0
            && self.gamma1 == other.gamma1
            && self.gamma2 == other.gamma2
            && self.sigma0 == other.sigma0
            && self.armijo_rho == other.armijo_rho
            && self.armijo_delta == other.armijo_delta
            && self.alpha0 == other.alpha0
            && self.nonmono == other.nonmono
            && self.neg_curv_margin == other.neg_curv_margin
            && self.retraction == other.retraction
            && self.levels == other.levels
            && self.coarsest_min_n == other.coarsest_min_n
    }
}

impl RunConfig {
    /// Start from a named preset from the catalog.
    pub fn from_preset(id: &str) -> Result<RunConfig> {
        presets::find(id)
            .map(|p| p.run_config())
            .ok_or_else(|| Error::Config(format!("unknown preset '{id}'")))
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Resolve the initial-data regime.
    pub fn regime(&self) -> InitRegime {
        match self.init {
            InitChoice::Explicit(r) => r,
            InitChoice::Auto => InitRegime::auto(self.spin, &self.interaction_params()),
        }
    }

    pub fn interaction_params(&self) -> InteractionParams {
        InteractionParams {
            beta0: self.beta[0],
            beta1: self.beta[1],
            beta2: self.beta[2],
            beta3: self.beta[3],
            p: self.p,
            q: self.q,
            m: self.magnetization,
        }
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let spec = ProblemSpec {
            f: self.spin,
            params: self.interaction_params(),
            potential: self.potential.clone(),
            axes: self.axes.clone(),
            regime: self.regime(),
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        self.solver.validate()?;
        Ok(self.solver)
    }

    /// Full validation of every cross-field rule.
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.spin) {
            return Err(Error::Config(format!("spin must be 1, 2 or 3, got {}", self.spin)));
        }
        self.problem_spec()?;
        self.solver_config()?;
        crate::solver::plan_levels_check(&self.problem_spec()?, &self.solver)?;
        Ok(())
    }

    /// Parse the flat config text.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let entries = tokenize(text)?;

        // preset expansion first, everything else overrides
        let mut cfg = match entries
            .iter()
            .find(|e| e.section == Section::Problem && e.key == "preset")
        {
            Some(e) => RunConfig::from_preset(&unquote(&e.value))?,
            None => default_config(),
        };

        let mut seen_axes: [Option<Axis>; 3] = [None, None, None];
        let mut dim_key: Option<usize> = None;
        let mut pot_h: Option<Vec<f64>> = None;
        let mut pot_a: Option<Vec<f64>> = None;
        let mut pot_s: Option<Vec<f64>> = None;

        for e in &entries {
            let key = e.key.as_str();
            let val = e.value.as_str();
            match e.section {
                Section::Problem => match key {
                    "preset" => {}
                    "spin" => cfg.spin = parse_num::<u32>(key, val)?,
                    "dim" => dim_key = Some(parse_num::<usize>(key, val)?),
                    "x" => seen_axes[0] = Some(parse_axis(key, val)?),
                    "y" => seen_axes[1] = Some(parse_axis(key, val)?),
                    "z" => seen_axes[2] = Some(parse_axis(key, val)?),
                    "magnetization" => cfg.magnetization = parse_num(key, val)?,
                    "beta0" => cfg.beta[0] = parse_num(key, val)?,
                    "beta1" => cfg.beta[1] = parse_num(key, val)?,
                    "beta2" => cfg.beta[2] = parse_num(key, val)?,
                    "beta3" => cfg.beta[3] = parse_num(key, val)?,
                    "p" => cfg.p = parse_num(key, val)?,
                    "q" => cfg.q = parse_num(key, val)?,
                    "harmonic" => pot_h = Some(parse_list(key, val)?),
                    "lattice_amp" => pot_a = Some(parse_list(key, val)?),
                    "lattice_period" => pot_s = Some(parse_list(key, val)?),
                    "init" => cfg.init = InitChoice::parse(&unquote(val))?,
                    "seed" => cfg.seed = parse_num(key, val)?,
                    other => {
                        return Err(Error::Config(format!("unknown [problem] key '{other}'")));
                    }
                },
                Section::Solver => match key {
                    "retraction" => cfg.solver.retraction = Retraction::parse(&unquote(val))?,
                    "levels" => cfg.solver.levels = parse_num(key, val)?,
                    "grad_tol" => cfg.solver.grad_tol = parse_num(key, val)?,
                    "grad_tol_coarse" => cfg.solver.grad_tol_coarse = parse_num(key, val)?,
                    "max_outer" => cfg.solver.max_outer = parse_num(key, val)?,
                    "rgbb_warm_tol" => cfg.solver.rgbb_warm_tol = parse_num(key, val)?,
                    "rgbb_warm_max_iters" => {
                        cfg.solver.rgbb_warm_max_iters = parse_num(key, val)?
                    }
                    "eta1" => cfg.solver.eta1 = parse_num(key, val)?,
                    "eta2" => cfg.solver.eta2 = parse_num(key, val)?,
                    "gamma0" => cfg.solver.gamma0 = parse_num(key, val)?,
                    "gamma1" => cfg.solver.gamma1 = parse_num(key, val)?,
                    "gamma2" => cfg.solver.gamma2 = parse_num(key, val)?,
                    "sigma0" => cfg.solver.sigma0 = parse_num(key, val)?,
                    "armijo_rho" => cfg.solver.armijo_rho = parse_num(key, val)?,
                    "armijo_delta" => cfg.solver.armijo_delta = parse_num(key, val)?,
                    "alpha0" => cfg.solver.alpha0 = parse_num(key, val)?,
                    "nonmonotone" => cfg.solver.nonmono = parse_num(key, val)?,
                    "neg_curv_margin" => cfg.solver.neg_curv_margin = parse_num(key, val)?,
                    other => {
                        return Err(Error::Config(format!("unknown [solver] key '{other}'")));
                    }
                },
                Section::Output => match key {
                    "dir" => cfg.out_dir = Some(PathBuf::from(unquote(val))),
                    "dump_full" => cfg.dump_full = parse_bool(key, val)?,
                    other => {
                        return Err(Error::Config(format!("unknown [output] key '{other}'")));
                    }
                },
            }
        }

        // assemble axes
        let axis_count = seen_axes.iter().filter(|a| a.is_some()).count();
        if axis_count > 0 {
            let dim = dim_key.unwrap_or(axis_count);
            let mut axes = Vec::with_capacity(dim);
            for (i, name) in ["x", "y", "z"].iter().enumerate().take(dim) {
                axes.push(
                    seen_axes[i]
                        .ok_or_else(|| Error::Config(format!("missing axis '{name}'")))?,
                );
            }
            if seen_axes.iter().skip(dim).any(|a| a.is_some()) {
                return Err(Error::Config(format!("more axes given than dim = {dim}")));
            }
            cfg.axes = axes;
        } else if let Some(d) = dim_key {
            if d != cfg.axes.len() {
                return Err(Error::Config(format!(
                    "dim = {d} disagrees with the {}-axis preset",
                    cfg.axes.len()
                )));
            }
        }

        let dim = cfg.axes.len();
        if dim == 0 {
            return Err(Error::Config("no axes given (set x/y/z or a preset)".into()));
        }
        if let Some(h) = pot_h {
            cfg.potential.harmonic = broadcast(h, dim, "harmonic")?;
        }
        if let Some(a) = pot_a {
            cfg.potential.lattice_amp = broadcast(a, dim, "lattice_amp")?;
        }
        if let Some(s) = pot_s {
            cfg.potential.lattice_period = broadcast(s, dim, "lattice_period")?;
        }
        if cfg.potential.harmonic.len() != dim {
            // preset potentials track the preset's dimension; adjust only
            // when the axes changed dimension without new potential keys
            return Err(Error::Config(format!(
                "potential has {} axes but the grid has {dim}; set harmonic/lattice_* keys",
                cfg.potential.harmonic.len()
            )));
        }

        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical flat-text form; `parse` of the output reproduces `self`.
    pub fn serialize(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "[problem]");
        if let Some(p) = &self.preset {
            let _ = writeln!(s, "preset = {p}");
        }
        let _ = writeln!(s, "spin = {}", self.spin);
        let _ = writeln!(s, "dim = {}", self.axes.len());
        for (ax, name) in self.axes.iter().zip(["x", "y", "z"]) {
            let _ = writeln!(s, "{name} = {} {} {}", fmt_f64(ax.a), fmt_f64(ax.b), ax.n);
        }
        let _ = writeln!(s, "magnetization = {}", fmt_f64(self.magnetization));
        for (i, b) in self.beta.iter().enumerate() {
            let _ = writeln!(s, "beta{i} = {}", fmt_f64(*b));
        }
        let _ = writeln!(s, "p = {}", fmt_f64(self.p));
        let _ = writeln!(s, "q = {}", fmt_f64(self.q));
        let _ = writeln!(s, "harmonic = {}", fmt_list(&self.potential.harmonic));
        let _ = writeln!(s, "lattice_amp = {}", fmt_list(&self.potential.lattice_amp));
        let _ = writeln!(s, "lattice_period = {}", fmt_list(&self.potential.lattice_period));
        let _ = writeln!(s, "init = {}", self.init.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[solver]");
        let sv = &self.solver;
        let _ = writeln!(s, "retraction = {}", sv.retraction.name());
        let _ = writeln!(s, "levels = {}", sv.levels);
        let _ = writeln!(s, "grad_tol = {}", fmt_f64(sv.grad_tol));
        let _ = writeln!(s, "grad_tol_coarse = {}", fmt_f64(sv.grad_tol_coarse));
        let _ = writeln!(s, "max_outer = {}", sv.max_outer);
        let _ = writeln!(s, "rgbb_warm_tol = {}", fmt_f64(sv.rgbb_warm_tol));
        let _ = writeln!(s, "rgbb_warm_max_iters = {}", sv.rgbb_warm_max_iters);
        let _ = writeln!(s, "eta1 = {}", fmt_f64(sv.eta1));
        let _ = writeln!(s, "eta2 = {}", fmt_f64(sv.eta2));
        let _ = writeln!(s, "gamma0 = {}", fmt_f64(sv.gamma0));
        let _ = writeln!(s, "gamma1 = {}", fmt_f64(sv.gamma1));
        let _ = writeln!(s, "gamma2 = {}", fmt_f64(sv.gamma2));
        let _ = writeln!(s, "sigma0 = {}", fmt_f64(sv.sigma0));
        let _ = writeln!(s, "armijo_rho = {}", fmt_f64(sv.armijo_rho));
        let _ = writeln!(s, "armijo_delta = {}", fmt_f64(sv.armijo_delta));
        let _ = writeln!(s, "alpha0 = {}", fmt_f64(sv.alpha0));
        let _ = writeln!(s, "nonmonotone = {}", fmt_f64(sv.nonmono));
        let _ = writeln!(s, "neg_curv_margin = {}", fmt_f64(sv.neg_curv_margin));
        let _ = writeln!(s, "\n[output]");
        if let Some(dir) = &self.out_dir {
            let _ = writeln!(s, "dir = {}", dir.display());
        }
        let _ = writeln!(s, "dump_full = {}", self.dump_full);
        s
    }
}

fn default_config() -> RunConfig {
    RunConfig {
        preset: None,
        spin: 1,
        axes: Vec::new(),
        magnetization: 0.0,
        beta: [0.0; 4],
        p: 0.0,
        q: 0.0,
        potential: PotentialSpec::zero(0),
        init: InitChoice::Auto,
        seed: 42,
        solver: SolverConfig::default(),
        out_dir: None,
        dump_full: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Problem,
    Solver,
    Output,
}

struct Entry {
    section: Section,
    key: String,
    value: String,
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut section: Option<Section> = None;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = Some(match name.trim() {
                "problem" => Section::Problem,
                "solver" => Section::Solver,
                "output" => Section::Output,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown section [{other}]",
                        lineno + 1
                    )));
                }
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let Some(section) = section else {
            return Err(Error::Config(format!(
                "line {}: key outside any [section]",
                lineno + 1
            )));
        };
        entries.push(Entry {
            section,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

fn unquote(s: &str) -> String {
    let t = s.trim();
    if t.len() >= 2 && ((t.starts_with('"') && t.ends_with('"')) || (t.starts_with('\'') && t.ends_with('\''))) {
        t[1..t.len() - 1].to_string()
    } else {
        t.to_string()
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, val: &str) -> Result<T> {
    val.trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{val}'")))
}

fn parse_bool(key: &str, val: &str) -> Result<bool> {
    match val.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("key '{key}': expected bool, got '{other}'"))),
    }
}

fn parse_list(key: &str, val: &str) -> Result<Vec<f64>> {
    val.split_whitespace().map(|t| parse_num::<f64>(key, t)).collect()
}

fn parse_axis(key: &str, val: &str) -> Result<Axis> {
    let parts: Vec<&str> = val.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "axis '{key}' needs 'a b n', got '{val}'"
        )));
    }
    Ok(Axis {
        a: parse_num(key, parts[0])?,
        b: parse_num(key, parts[1])?,
        n: parse_num(key, parts[2])?,
    })
}

fn broadcast(vals: Vec<f64>, dim: usize, key: &str) -> Result<Vec<f64>> {
    if vals.len() == dim {
        Ok(vals)
    } else if vals.len() == 1 {
        Ok(vec![vals[0]; dim])
    } else {
        Err(Error::Config(format!(
            "key '{key}' needs 1 or {dim} values, got {}",
            vals.len()
        )))
    }
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:e}");
    }
    s
}

fn fmt_list(vals: &[f64]) -> String {
    vals.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_reference_expands() {
        let cfg = RunConfig::parse("[problem]\npreset = spin2-1d-case2\n").unwrap();
        assert_eq!(cfg.spin, 2);
        assert_eq!(cfg.axes.len(), 1);
        assert_eq!(cfg.axes[0].n, 512);
        assert_eq!(cfg.axes[0].a, -16.0);
        assert_eq!(cfg.beta[0], 243.0);
        assert_eq!(cfg.beta[1], 12.1);
        assert_eq!(cfg.beta[2], -13.0);
        assert_eq!(cfg.potential.lattice_amp, vec![25.0]);
        assert_eq!(cfg.potential.lattice_period, vec![4.0]);
    }

    #[test]
    fn magnetization_bound_is_validated() {
        let text = "[problem]\npreset = spin2-1d-case2\nmagnetization = 3.0\n";
        assert!(matches!(RunConfig::parse(text), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_fail_closed() {
        let text = "[problem]\npreset = spin2-1d-case2\nbogus = 1\n";
        assert!(RunConfig::parse(text).is_err());
        let text2 = "[problem]\npreset = spin2-1d-case2\n[extra]\nx = 1\n";
        assert!(RunConfig::parse(text2).is_err());
        let text3 = "[solver]\nspin = 2\n";
        assert!(RunConfig::parse(text3).is_err());
    }

    #[test]
    fn odd_n_rejected() {
        let text = "[problem]\nspin = 1\nx = -8 8 127\nmagnetization = 0\nbeta0 = 1\n";
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn full_explicit_config_parses() {
        let text = "\
[problem]
spin = 2
dim = 2
x = -8 8 64
y = -8 8 64
magnetization = 0.5
beta0 = 243
beta1 = 12.1
beta2 = -13
harmonic = 1
lattice_amp = 10
lattice_period = 2
init = nematic
seed = 7

[solver]
retraction = orthogonal
levels = 2
grad_tol = 1e-5

[output]
dir = /tmp/run-here
dump_full = false
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.axes.len(), 2);
        assert_eq!(cfg.solver.retraction, Retraction::Orthogonal);
        assert_eq!(cfg.solver.levels, 2);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.potential.harmonic, vec![1.0, 1.0]);
        assert_eq!(cfg.out_dir, Some(PathBuf::from("/tmp/run-here")));
    }

    #[test]
    fn serialize_round_trip() {
        for id in ["spin1-2d", "spin2-1d-case2", "spin3-3d-case2", "spin2-3d-case1"] {
            let mut cfg = RunConfig::from_preset(id).unwrap();
            cfg.magnetization = 0.5;
            cfg.solver.retraction = Retraction::ClosedForm;
            cfg.seed = 99;
            let text = cfg.serialize();
            let re = RunConfig::parse(&text).unwrap();
            assert_eq!(cfg, re, "round trip failed for {id}:\n{text}");
        }
    }
}
