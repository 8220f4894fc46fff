//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Manifests written by a run use the same format plus `meta.*` keys,
//! which [`RunConfig::from_manifest`] skips.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::krylov::SolverConfig;
use crate::schemes::{InitialCondition, NonlinearConfig, ProblemSpec, Strategy};
use crate::spectral::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Evolve,
    Convergence,
    SolverBench,
    Drift,
    RhoDemo,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Evolve,
        ExperimentKind::Convergence,
        ExperimentKind::SolverBench,
        ExperimentKind::Drift,
        ExperimentKind::RhoDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::SolverBench => "solver-bench",
            ExperimentKind::Drift => "drift",
            ExperimentKind::RhoDemo => "rho-demo",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// Every knob of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub length: f64,
    pub n: usize,
    pub alpha: f64,
    pub rho: usize,
    pub dt: f64,
    pub t_end: f64,
    pub initial: InitialCondition,
    pub strategy: Strategy,
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Jacobi scaling for original-system strategies.
    pub preconditioned: bool,
    pub nl_tol: f64,
    pub nl_max: usize,
    pub out_dir: PathBuf,
    /// Snapshot cadence in steps; 0 keeps only the first and last level.
    pub snapshot_every: usize,
    /// Time steps swept by the convergence study.
    pub dts: Vec<f64>,
    pub ref_n: usize,
    pub ref_dt: f64,
    /// Strategies and grid sizes swept by the solver benchmark.
    pub strategies: Vec<Strategy>,
    pub grid_sizes: Vec<usize>,
}

const KEYS: &[&str] = &[
    "kind",
    "L",
    "N",
    "alpha",
    "rho",
    "dt",
    "t_end",
    "initial_condition",
    "amplitude",
    "wavenumber",
    "width",
    "center",
    "strategy",
    "rel_tol",
    "max_iters",
    "preconditioned",
    "nl_tol",
    "nl_max",
    "out",
    "snapshot_every",
    "dts",
    "ref_n",
    "ref_dt",
    "strategies",
    "grid_sizes",
];

impl RunConfig {
    /// Defaults reproducing the standard soliton setup for each experiment.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            length: 20.0,
            n: 101,
            alpha: 2.0,
            rho: 1,
            dt: 0.02,
            t_end: 20.0,
            initial: InitialCondition::soliton(),
            strategy: Strategy::OriginalCocg,
            rel_tol: 1e-10,
            max_iters: 1000,
            preconditioned: false,
            nl_tol: 1e-10,
            nl_max: 100,
            out_dir: PathBuf::from("results").join(kind.name()),
            snapshot_every: 25,
            dts: vec![0.02, 0.01, 0.005, 0.0025],
            ref_n: 303,
            ref_dt: 0.001,
            strategies: vec![Strategy::TransformedPrecondBicgstab],
            grid_sizes: vec![401, 1001, 4001],
        };
        match kind {
            ExperimentKind::Evolve => base,
            ExperimentKind::Convergence => Self {
                alpha: 1.6,
                n: 303,
                ..base
            },
            ExperimentKind::SolverBench => Self {
                t_end: 8.0,
                strategy: Strategy::TransformedPrecondBicgstab,
                ..base
            },
            ExperimentKind::Drift => Self {
                alpha: 1.6,
                t_end: 400.0,
                snapshot_every: 500,
                ..base
            },
            ExperimentKind::RhoDemo => Self {
                n: 31,
                rho: 2,
                alpha: 1.6,
                t_end: 4.0,
                initial: InitialCondition::modulated_sech(1.0, 0.5, 1.0, 10.0),
                ..base
            },
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let spec = ProblemSpec {
            grid: Grid::new(self.length, self.n)?,
            alpha: self.alpha,
            rho: self.rho,
            dt: self.dt,
            t_end: self.t_end,
            initial: self.initial,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn solver(&self) -> SolverConfig {
        self.strategy.solver_config(&SolverConfig {
            rel_tol: self.rel_tol,
            max_iters: self.max_iters,
            preconditioned: self.preconditioned,
            ..SolverConfig::default()
        })
    }

    pub fn nonlinear(&self) -> NonlinearConfig {
        NonlinearConfig {
            tol: self.nl_tol,
            max_sweeps: self.nl_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem()?;
        self.solver().validate()?;
        if !(self.nl_tol > 0.0) || self.nl_max == 0 {
            return Err(Error::Config("nl_tol must be positive and nl_max at least 1".into()));
        }
        if self.kind == ExperimentKind::Convergence {
            if self.dts.is_empty() || self.dts.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::Config("dts must be a non-empty list of positive steps".into()));
            }
            if self.ref_n % self.n != 0 {
                return Err(Error::Config(format!(
                    "ref_n = {} must be a multiple of N = {} so that grid nodes coincide",
                    self.ref_n, self.n
                )));
            }
            Grid::new(self.length, self.ref_n)?;
        }
        if self.kind == ExperimentKind::SolverBench && (self.strategies.is_empty() || self.grid_sizes.is_empty()) {
            return Err(Error::Config("solver-bench needs at least one strategy and one grid size".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "kind" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.kind {
                    return Err(Error::Config(format!("config is for `{kind}`, running `{}`", self.kind)));
                }
            }
            "L" => self.length = parse(key, value)?,
            "N" => self.n = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "initial_condition" => {
                if value != "modulated-sech" {
                    return Err(Error::Config(format!("unknown initial condition `{value}`")));
                }
            }
            "amplitude" => self.initial.amplitude = parse(key, value)?,
            "wavenumber" => self.initial.wavenumber = parse(key, value)?,
            "width" => self.initial.width = parse(key, value)?,
            "center" => self.initial.center = parse(key, value)?,
            "strategy" => self.strategy = value.parse()?,
            "rel_tol" => self.rel_tol = parse(key, value)?,
            "max_iters" => self.max_iters = parse(key, value)?,
            "preconditioned" => self.preconditioned = parse(key, value)?,
            "nl_tol" => self.nl_tol = parse(key, value)?,
            "nl_max" => self.nl_max = parse(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "snapshot_every" => self.snapshot_every = parse(key, value)?,
            "dts" => self.dts = parse_list(key, value)?,
            "ref_n" => self.ref_n = parse(key, value)?,
            "ref_dt" => self.ref_dt = parse(key, value)?,
            "strategies" => self.strategies = parse_list(key, value)?,
            "grid_sizes" => self.grid_sizes = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a config file body on top of the defaults for `kind`.
    pub fn from_text(kind: ExperimentKind, text: &str) -> Result<Self> {
        let mut cfg = Self::for_kind(kind);
        for (key, value) in pairs(text)? {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }

    /// Re-reads a manifest; the kind comes from its `kind` line and `meta.*` keys are skipped.
    pub fn from_manifest(text: &str) -> Result<Self> {
        let pairs = pairs(text)?;
        let kind = pairs
            .iter()
            .find(|(k, _)| k == "kind")
            .ok_or_else(|| Error::Config("manifest has no `kind`".into()))?
            .1
            .parse()?;
        let mut cfg = Self::for_kind(kind);
        for (key, value) in pairs.iter().filter(|(k, _)| !k.starts_with("meta.")) {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Serializes every key; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match *key {
                "kind" => self.kind.to_string(),
                "L" => self.length.to_string(),
                "N" => self.n.to_string(),
                "alpha" => self.alpha.to_string(),
                "rho" => self.rho.to_string(),
                "dt" => self.dt.to_string(),
                "t_end" => self.t_end.to_string(),
                "initial_condition" => "modulated-sech".to_string(),
                "amplitude" => self.initial.amplitude.to_string(),
                "wavenumber" => self.initial.wavenumber.to_string(),
                "width" => self.initial.width.to_string(),
                "center" => self.initial.center.to_string(),
                "strategy" => self.strategy.to_string(),
                "rel_tol" => self.rel_tol.to_string(),
                "max_iters" => self.max_iters.to_string(),
                "preconditioned" => self.preconditioned.to_string(),
                "nl_tol" => self.nl_tol.to_string(),
                "nl_max" => self.nl_max.to_string(),
                "out" => self.out_dir.display().to_string(),
                "snapshot_every" => self.snapshot_every.to_string(),
                "dts" => join(&self.dts),
                "ref_n" => self.ref_n.to_string(),
                "ref_dt" => self.ref_dt.to_string(),
                "strategies" => join(&self.strategies),
                "grid_sizes" => join(&self.grid_sizes),
                _ => unreachable!(),
            };
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Splits a config body into `(key, value)` pairs.
pub fn pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parses a repeatable `--override key=value` argument.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    arg.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::Config(format!("override `{arg}` is not of the form key=value")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_text() {
        for kind in ExperimentKind::ALL {
            let cfg = RunConfig::for_kind(kind);
            cfg.validate().unwrap();
            let back = RunConfig::from_manifest(&cfg.to_text()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn parses_comments_lists_and_overrides() {
        let text = "# large step\nN = 401\ndt = 0.2\n\nstrategies = transformed-precond-bicgstab, original-cocg\ngrid_sizes=401,1001\n";
        let cfg = RunConfig::from_text(ExperimentKind::SolverBench, text).unwrap();
        assert_eq!(cfg.n, 401);
        assert_eq!(cfg.dt, 0.2);
        assert_eq!(cfg.strategies, vec![Strategy::TransformedPrecondBicgstab, Strategy::OriginalCocg]);
        assert_eq!(cfg.grid_sizes, vec![401, 1001]);
        assert_eq!(parse_override("alpha=1.2").unwrap(), ("alpha".into(), "1.2".into()));
        assert!(parse_override("alpha").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_text(ExperimentKind::Evolve, "colour = blue").is_err());
        assert!(RunConfig::from_text(ExperimentKind::Evolve, "N = many").is_err());
        assert!(RunConfig::from_text(ExperimentKind::Evolve, "just a line").is_err());
        assert!(RunConfig::from_text(ExperimentKind::Evolve, "kind = drift").is_err());
        assert!(RunConfig::from_text(ExperimentKind::Evolve, "meta.version = 1").is_err());
        assert!(RunConfig::from_text(ExperimentKind::Evolve, "initial_condition = gaussian").is_err());
        let cfg = RunConfig::from_text(ExperimentKind::Evolve, "N = 100").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_text(ExperimentKind::Convergence, "ref_n = 305").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn manifest_skips_meta_keys() {
        let mut text = RunConfig::for_kind(ExperimentKind::Drift).to_text();
        text.push_str("meta.version = 0.1.0\nmeta.exit_code = 0\n");
        assert_eq!(RunConfig::from_manifest(&text).unwrap(), RunConfig::for_kind(ExperimentKind::Drift));
    }
}
