use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::schemes::{Probes, Scheme, StepReport, Strategy, Trajectory};
use crate::spectral::Grid;

use super::config::{ExperimentKind, RunConfig};

/// Files written by one run plus its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// 0 on success, 3 when the integration failed part way.
    pub exit_code: i32,
    pub failure: Option<String>,
    /// Extra `meta.*` entries written to the manifest.
    pub meta: Vec<(String, String)>,
}

impl ResultBundle {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            exit_code: 0,
            failure: None,
            meta: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn fail(&mut self, err: &Error) {
        self.exit_code = 3;
        self.failure = Some(err.to_string());
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    fn finish(mut self, cfg: &RunConfig) -> Result<Self> {
        let mut text = cfg.to_text();
        writeln!(text, "meta.version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(text, "meta.exit_code = {}", self.exit_code).unwrap();
        if let Some(f) = &self.failure {
            writeln!(text, "meta.failure = {}", f.replace('\n', " ")).unwrap();
        }
        for (k, v) in &self.meta {
            writeln!(text, "meta.{k} = {v}").unwrap();
        }
        self.write("manifest.txt", &text)?;
        Ok(self)
    }
}

/// Iteration statistics over the multistep solves of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub steps: usize,
    pub max: usize,
    pub min: usize,
    pub mean: f64,
    pub matvecs: usize,
}

impl IterationStats {
    pub fn from_reports(reports: &[StepReport]) -> Option<Self> {
        let its = reports.iter().map(|r| r.report.iterations);
        Some(Self {
            steps: reports.len(),
            max: its.clone().max()?,
            min: its.clone().min()?,
            mean: its.sum::<usize>() as f64 / reports.len() as f64,
            matvecs: reports.iter().map(|r| r.report.matvec_count).sum(),
        })
    }
}

/// One strategy on one grid size.
#[derive(Debug)]
pub struct BenchRun {
    pub strategy: Strategy,
    pub n: usize,
    pub reports: Vec<StepReport>,
    pub stats: Option<IterationStats>,
    /// Multistep solves only; the starter is excluded.
    pub stepping_time: Duration,
    pub failure: Option<Error>,
    pub failed_at_step: Option<usize>,
}

/// Runs `cfg` with the given strategy and grid size and collects solver statistics.
pub fn bench_strategy(cfg: &RunConfig, strategy: Strategy, n: usize) -> Result<BenchRun> {
    let cfg = RunConfig {
        strategy,
        n,
        ..cfg.clone()
    };
    let scheme = Scheme::new(cfg.problem()?)?;
    let (traj, failure) = scheme.integrate_partial(strategy, &cfg.solver(), &cfg.nonlinear(), &Probes::none());
    Ok(BenchRun {
        strategy,
        n,
        stats: IterationStats::from_reports(&traj.reports),
        reports: traj.reports,
        stepping_time: traj.stepping_time,
        failed_at_step: failure.as_ref().map(|_| traj.final_step + 1),
        failure,
    })
}

/// Errors of the multistep scheme against a fine nonlinear reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    /// `(dt, max_j |U_j - U_ref(x_j)|)` at `t_end`.
    pub rows: Vec<(f64, f64)>,
    pub slope: f64,
}

/// Least-squares slope of `log(err)` against `log(dt)`.
pub fn fit_slope(rows: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Reference solution on the `ref_n` grid by Crank–Nicolson with `ref_dt`.
pub fn reference_solution(cfg: &RunConfig) -> Result<Trajectory> {
    let spec = crate::schemes::ProblemSpec {
        grid: Grid::new(cfg.length, cfg.ref_n)?,
        dt: cfg.ref_dt,
        rho: 1,
        ..cfg.problem()?
    };
    let strategy = Strategy::TransformedPrecondBicgstab;
    let solver = RunConfig { strategy, ..cfg.clone() }.solver();
    Scheme::new(spec)?.cn_integrate(strategy, &solver, &cfg.nonlinear(), &Probes::none())
}

/// Sweeps `cfg.dts` on the `N` grid against [`reference_solution`].
pub fn convergence_study(cfg: &RunConfig) -> Result<ConvergenceStudy> {
    cfg.validate()?;
    let reference = reference_solution(cfg)?;
    let stride = cfg.ref_n / cfg.n;
    let mut rows = Vec::with_capacity(cfg.dts.len());
    for &dt in &cfg.dts {
        let spec = crate::schemes::ProblemSpec { dt, ..cfg.problem()? };
        let traj = Scheme::new(spec)?.integrate(cfg.strategy, &cfg.solver(), &cfg.nonlinear(), &Probes::none())?;
        let err = traj
            .final_state
            .iter()
            .enumerate()
            .map(|(j, u)| (u - reference.final_state[j * stride]).norm())
            .fold(0.0, f64::max);
        rows.push((dt, err));
    }
    Ok(ConvergenceStudy {
        slope: fit_slope(&rows),
        rows,
    })
}

/// Largest `|M(t) - M(0)|` and `|H~(t) - H~(0)|` over samples with `t <= horizon`.
pub fn max_drift(traj: &Trajectory, horizon: f64) -> (f64, f64) {
    let Some(first) = traj.samples.first() else {
        return (0.0, 0.0);
    };
    traj.samples
        .iter()
        .filter(|s| s.time <= horizon + 1e-9)
        .fold((0.0, 0.0), |(m, h), s| {
            (
                f64::max(m, (s.mass - first.mass).abs()),
                f64::max(h, (s.single_step_energy - first.single_step_energy).abs()),
            )
        })
}

fn snapshots_csv(traj: &Trajectory, grid: &Grid) -> String {
    let mut out = String::from("t,x,re,im,abs\n");
    for snap in &traj.snapshots {
        for (j, u) in snap.state.iter().enumerate() {
            writeln!(out, "{},{},{},{},{}", snap.time, grid.node(j), u.re, u.im, u.norm()).unwrap();
        }
    }
    out
}

/// `H_two_step` holds the two-level energy for `rho = 1` and the window energy otherwise.
fn invariants_csv(traj: &Trajectory, rho: usize) -> String {
    let mut out = String::from("n,t,mass,H_two_step,H_single\n");
    for (n, s) in traj.samples.iter().enumerate() {
        let h = if rho == 1 {
            s.two_step_energy
        } else {
            traj.window_energy.get(n).copied().flatten()
        };
        let h = h.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{n},{},{},{h},{}", s.time, s.mass, s.single_step_energy).unwrap();
    }
    out
}

fn solver_rows(out: &mut String, strategy: Strategy, reports: &[StepReport]) {
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step,
            strategy,
            r.report.iterations,
            r.report.matvec_count,
            r.report.final_residual(),
            r.report.converged
        )
        .unwrap();
    }
}

const SOLVER_HEADER: &str = "n,strategy,iterations,matvecs,final_residual,converged\n";

fn integrate_bundle(cfg: &RunConfig, probes: &Probes) -> Result<ResultBundle> {
    cfg.validate()?;
    let mut bundle = ResultBundle::new(&cfg.out_dir)?;
    let scheme = Scheme::new(cfg.problem()?)?;
    let (traj, failure) = scheme.integrate_partial(cfg.strategy, &cfg.solver(), &cfg.nonlinear(), probes);
    if let Some(err) = &failure {
        bundle.fail(err);
        bundle.meta("failed_at_step", traj.final_step + 1);
    }
    bundle.write("snapshots.csv", &snapshots_csv(&traj, scheme.spectral().grid()))?;
    bundle.write("invariants.csv", &invariants_csv(&traj, cfg.rho))?;
    let mut solver = String::from(SOLVER_HEADER);
    solver_rows(&mut solver, cfg.strategy, &traj.reports);
    bundle.write("solver.csv", &solver)?;
    let (mass, energy) = max_drift(&traj, f64::INFINITY);
    bundle.meta("steps_completed", traj.final_step);
    bundle.meta("max_mass_drift", mass);
    bundle.meta("max_energy_drift", energy);
    bundle.meta("stepping_time_s_excluding_starter", traj.stepping_time.as_secs_f64());
    Ok(bundle)
}

fn snapshot_probes(cfg: &RunConfig) -> Probes {
    Probes {
        invariants: true,
        snapshot_every: (cfg.snapshot_every > 0).then_some(cfg.snapshot_every),
        snapshot_steps: vec![0, cfg.problem().map(|p| p.steps()).unwrap_or(0)],
    }
}

/// Integrates once and writes snapshots, invariants and per-step solver data.
pub fn run_evolve(cfg: &RunConfig) -> Result<ResultBundle> {
    integrate_bundle(cfg, &snapshot_probes(cfg))?.finish(cfg)
}

/// Long run for the invariant drift series.
pub fn run_invariant_drift(cfg: &RunConfig) -> Result<ResultBundle> {
    integrate_bundle(cfg, &snapshot_probes(cfg))?.finish(cfg)
}

/// Higher-order nonlinearity; `H_two_step` in invariants.csv is the window energy.
pub fn run_rho_demo(cfg: &RunConfig) -> Result<ResultBundle> {
    if cfg.rho < 2 {
        return Err(Error::Config("rho-demo needs rho >= 2".into()));
    }
    integrate_bundle(cfg, &snapshot_probes(cfg))?.finish(cfg)
}

pub fn run_convergence(cfg: &RunConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let mut bundle = ResultBundle::new(&cfg.out_dir)?;
    match convergence_study(cfg) {
        Ok(study) => {
            let mut out = String::from("dt,max_error\n");
            for (dt, err) in &study.rows {
                writeln!(out, "{dt},{err}").unwrap();
            }
            bundle.write("convergence.csv", &out)?;
            bundle.meta("slope", study.slope);
        }
        Err(err) if err.is_numerical() => bundle.fail(&err),
        Err(err) => return Err(err),
    }
    bundle.finish(cfg)
}

/// Every strategy on every grid size. Timing goes to timing.csv so that the
/// other tables are reproducible bit for bit.
pub fn run_solver_bench(cfg: &RunConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let mut bundle = ResultBundle::new(&cfg.out_dir)?;
    let mut solver = String::from(SOLVER_HEADER.replacen("n,", "N,n,", 1));
    let mut summary = String::from("strategy,N,steps,max,min,avg,matvecs,failed_at_step\n");
    let mut timing = String::from("strategy,N,wall_clock_s_excluding_starter\n");
    for &n in &cfg.grid_sizes {
        for &strategy in &cfg.strategies {
            let run = bench_strategy(cfg, strategy, n)?;
            for r in &run.reports {
                solver.push_str(&format!("{n},"));
                solver_rows(&mut solver, strategy, std::slice::from_ref(r));
            }
            let failed = run.failed_at_step.map(|s| s.to_string());
            match run.stats {
                Some(s) => writeln!(
                    summary,
                    "{strategy},{n},{},{},{},{},{},{}",
                    s.steps,
                    s.max,
                    s.min,
                    s.mean,
                    s.matvecs,
                    failed.unwrap_or_default()
                ),
                None => writeln!(summary, "{strategy},{n},0,,,,0,{}", failed.unwrap_or_default()),
            }
            .unwrap();
            writeln!(timing, "{strategy},{n},{}", run.stepping_time.as_secs_f64()).unwrap();
            if let Some(err) = &run.failure {
                if !err.is_numerical() {
                    return Err(run.failure.unwrap());
                }
                bundle.meta(&format!("failure.{strategy}.{n}"), err.to_string().replace('\n', " "));
            }
        }
    }
    bundle.write("solver.csv", &solver)?;
    bundle.write("summary.csv", &summary)?;
    bundle.write("timing.csv", &timing)?;
    bundle.finish(cfg)
}

/// Dispatches on [`RunConfig::kind`].
pub fn run(cfg: &RunConfig) -> Result<ResultBundle> {
    match cfg.kind {
        ExperimentKind::Evolve => run_evolve(cfg),
        ExperimentKind::Convergence => run_convergence(cfg),
        ExperimentKind::SolverBench => run_solver_bench(cfg),
        ExperimentKind::Drift => run_invariant_drift(cfg),
        ExperimentKind::RhoDemo => run_rho_demo(cfg),
    }
}
