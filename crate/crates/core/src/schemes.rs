//! Time integrators.
//!
//! * [`Scheme::cn_start`]: nonlinear Crank–Nicolson step producing the second
//!   starting level, solved by Picard sweeps with inner Krylov solves.
//! * [`Scheme::li_step`]: the linearly implicit two-step scheme
//!   `(U+ - U-)/(2 dt) = -i Lambda (U+ + U-)/2 + i |U|^2 (U+ + U-)/2`.
//! * [`Scheme::li_rho_step`]: its `(rho+1)`-step analogue for `|u|^{2 rho} u`.
//!
//! Every linear step solves `A U+ = (2I - A) U-` with the frozen operator
//! `A = I + i tau (Lambda - D)` for an effective step `tau`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::invariants::{check_alpha, InvariantSample, Invariants};
use crate::krylov::{self, Method, SolverConfig, SolverReport};
use crate::operators::StepOperator;
use crate::spectral::{FractionalSymbol, Grid, Spectral, StateVector};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Initial data `a e^{i q x} sech(w (x - c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub amplitude: f64,
    pub wavenumber: f64,
    pub width: f64,
    pub center: f64,
}

impl InitialCondition {
    pub fn modulated_sech(amplitude: f64, wavenumber: f64, width: f64, center: f64) -> Self {
        Self {
            amplitude,
            wavenumber,
            width,
            center,
        }
    }

    /// `2 e^{0.5 i x} sech(sqrt(2) (x - 10))`, a snapshot of the cubic soliton.
    pub fn soliton() -> Self {
        Self::modulated_sech(2.0, 0.5, std::f64::consts::SQRT_2, 10.0)
    }

    pub fn eval(&self, x: f64) -> C64 {
        let envelope = self.amplitude / (self.width * (x - self.center)).cosh();
        C64::from_polar(envelope, self.wavenumber * x)
    }

    pub fn sample(&self, grid: &Grid) -> StateVector {
        grid.sample(|x| self.eval(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub alpha: f64,
    pub rho: usize,
    pub dt: f64,
    pub t_end: f64,
    pub initial: InitialCondition,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.rho == 0 {
            return Err(Error::Domain("rho must be a positive integer".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt * (1.0 - 1e-12)) {
            return Err(Error::Domain(format!("t_end = {} must be at least dt = {}", self.t_end, self.dt)));
        }
        Ok(())
    }

    /// Number of time steps, `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Which linear system is solved and by which Krylov method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    OriginalCocg,
    OriginalCocr,
    OriginalBicgstab,
    TransformedPrecondBicgstab,
    TransformedPrecondCocg,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::OriginalCocg,
        Strategy::OriginalCocr,
        Strategy::OriginalBicgstab,
        Strategy::TransformedPrecondBicgstab,
        Strategy::TransformedPrecondCocg,
    ];

    pub fn method(self) -> Method {
        match self {
            Strategy::OriginalCocg | Strategy::TransformedPrecondCocg => Method::Cocg,
            Strategy::OriginalCocr => Method::Cocr,
            Strategy::OriginalBicgstab | Strategy::TransformedPrecondBicgstab => Method::BiCgStab,
        }
    }

    pub fn is_transformed(self) -> bool {
        matches!(self, Strategy::TransformedPrecondBicgstab | Strategy::TransformedPrecondCocg)
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::OriginalCocg => "original-cocg",
            Strategy::OriginalCocr => "original-cocr",
            Strategy::OriginalBicgstab => "original-bicgstab",
            Strategy::TransformedPrecondBicgstab => "transformed-precond-bicgstab",
            Strategy::TransformedPrecondCocg => "transformed-precond-cocg",
        }
    }

    /// Solver settings for this strategy. Transformed systems always use the
    /// Fourier-diagonal preconditioner; for original systems
    /// `base.preconditioned` selects Jacobi scaling.
    pub fn solver_config(self, base: &SolverConfig) -> SolverConfig {
        SolverConfig {
            method: self.method(),
            preconditioned: self.is_transformed() || base.preconditioned,
            ..*base
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// Solves `A x = rhs` for one frozen step operator.
///
/// Transformed strategies solve `F A F^{-1} y = F rhs` with `M = I + i tau D_alpha`
/// starting from `y0 = F guess` and return `F^{-1} y`. Since `F` is unitary the
/// monitored relative residual equals the physical one.
pub fn solve_step_system(
    op: &StepOperator,
    rhs: &[C64],
    guess: &[C64],
    strategy: Strategy,
    cfg: &SolverConfig,
) -> Result<(StateVector, SolverReport)> {
    let cfg = strategy.solver_config(cfg);
    if strategy.is_transformed() {
        let sp = op.spectral();
        let b_hat = sp.forward(rhs)?;
        let y0 = sp.forward(guess)?;
        let t_op = op.transformed();
        let m = op.preconditioner();
        let sol = krylov::solve(
            |x, out| t_op.apply_into(x, out),
            &b_hat,
            &y0,
            |r, z| m.solve_into(r, z),
            &cfg,
        )?;
        Ok((sp.inverse(&sol.x)?, sol.report))
    } else {
        Error::check_len(op.n(), rhs.len())?;
        let a = |x: &[C64], out: &mut [C64]| op.apply_into(x, out);
        let sol = if cfg.preconditioned {
            let jac = op.jacobi();
            krylov::solve(a, rhs, guess, |r, z| jac.solve_into(r, z), &cfg)?
        } else {
            krylov::solve(a, rhs, guess, krylov::identity, &cfg)?
        };
        Ok((sol.x.into(), sol.report))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearConfig {
    /// Max-norm tolerance on the nonlinear residual.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnDiagnostics {
    pub sweeps: usize,
    /// Max-norm nonlinear residual of the accepted iterate.
    pub residual: f64,
    /// Rounding error bound of the residual evaluation itself.
    pub floor: f64,
    pub linear_iterations: usize,
}

/// Time levels kept by a multistep integrator, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub step: usize,
    pub dt: f64,
    history: VecDeque<StateVector>,
}

impl SchemeState {
    /// State at level `step` from levels ordered newest first.
    pub fn new(step: usize, dt: f64, newest_first: Vec<StateVector>) -> Self {
        Self {
            step,
            dt,
            history: newest_first.into(),
        }
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// `U^(step - lag)`.
    pub fn level(&self, lag: usize) -> &StateVector {
        &self.history[lag]
    }

    pub fn current(&self) -> &StateVector {
        self.level(0)
    }

    pub fn depth(&self) -> usize {
        self.history.len()
    }

    pub fn levels(&self) -> impl Iterator<Item = &StateVector> {
        self.history.iter()
    }

    /// Pushes `U^(step+1)`, keeping at most `keep` levels.
    pub fn advance(&mut self, next: StateVector, keep: usize) {
        self.history.push_front(next);
        self.history.truncate(keep);
        self.step += 1;
    }
}

/// What [`Scheme::integrate`] records along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Probes {
    pub invariants: bool,
    /// Store a snapshot every this many steps (and always at the first and last level).
    pub snapshot_every: Option<usize>,
    pub snapshot_steps: Vec<usize>,
}

impl Default for Probes {
    fn default() -> Self {
        Self {
            invariants: true,
            snapshot_every: Some(25),
            snapshot_steps: Vec::new(),
        }
    }
}

impl Probes {
    pub fn none() -> Self {
        Self {
            invariants: false,
            snapshot_every: None,
            snapshot_steps: Vec::new(),
        }
    }

    fn wants(&self, step: usize, last: usize) -> bool {
        match self.snapshot_every {
            Some(every) if every > 0 => step % every == 0 || step == last,
            _ => self.snapshot_steps.contains(&step),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub state: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub report: SolverReport,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub dt: f64,
    /// One sample per computed level, starting at `n = 0`.
    pub samples: Vec<InvariantSample>,
    /// `H_d^rho(U^(n), ..., U^(n-rho))` per level; `None` until `rho + 1` levels exist.
    pub window_energy: Vec<Option<f64>>,
    /// Linear solves of the multistep scheme; the starter is excluded.
    pub reports: Vec<StepReport>,
    pub starter: Vec<CnDiagnostics>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: StateVector,
    pub final_step: usize,
    /// Wall-clock time spent in the multistep solves, starter excluded.
    pub stepping_time: Duration,
}

/// Fixed data shared by all steps of one problem.
#[derive(Debug, Clone)]
pub struct Scheme {
    spec: ProblemSpec,
    spectral: Spectral,
    symbol: Arc<FractionalSymbol>,
    invariants: Invariants,
}

impl Scheme {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let spectral = Spectral::new(spec.grid);
        let symbol = Arc::new(spectral.symbol(spec.alpha)?);
        let invariants = Invariants::new(&spectral, spec.alpha)?;
        Ok(Self {
            spec,
            spectral,
            symbol,
            invariants,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn symbol(&self) -> &Arc<FractionalSymbol> {
        &self.symbol
    }

    pub fn invariants(&self) -> &Invariants {
        &self.invariants
    }

    pub fn initial_state(&self) -> StateVector {
        self.spec.initial.sample(&self.spec.grid)
    }

    pub fn operator(&self, tau: f64, density: Vec<f64>) -> Result<StepOperator> {
        StepOperator::new(&self.spectral, self.symbol.clone(), tau, density)
    }

    /// One linear solve `(I + i tau (Lambda - D)) U+ = (I - i tau (Lambda - D)) U-`.
    ///
    /// `tau` may be negative, which runs the scheme backwards in time.
    pub fn linear_step(
        &self,
        density: Vec<f64>,
        prev: &[C64],
        guess: &[C64],
        tau: f64,
        strategy: Strategy,
        cfg: &SolverConfig,
    ) -> Result<(StateVector, SolverReport)> {
        let op = self.operator(tau, density)?;
        let rhs = op.rhs_build(prev)?;
        solve_step_system(&op, &rhs, guess, strategy, cfg)
    }

    /// `U^(n+1)` of the two-step scheme from `U^(n)` and `U^(n-1)`.
    pub fn li_step(&self, state: &SchemeState, strategy: Strategy, cfg: &SolverConfig) -> Result<(StateVector, SolverReport)> {
        if state.depth() < 2 {
            return Err(Error::Domain("two-step scheme needs two levels".into()));
        }
        let current = state.current();
        let density = current.iter().map(|z| z.norm_sqr()).collect();
        self.linear_step(density, state.level(1), current, self.spec.dt, strategy, cfg)
            .map_err(|e| e.at_step(state.step + 1))
    }

    /// `U^(n+1)` of the `(rho+1)`-step scheme from `U^(n), ..., U^(n-rho)`.
    pub fn li_rho_step(&self, state: &SchemeState, strategy: Strategy, cfg: &SolverConfig) -> Result<(StateVector, SolverReport)> {
        let rho = self.spec.rho;
        if state.depth() < rho + 1 {
            return Err(Error::Domain(format!("(rho+1)-step scheme needs {} levels, have {}", rho + 1, state.depth())));
        }
        let n = self.spec.grid.n();
        let mut density = vec![1.0; n];
        for lag in 0..rho {
            for (d, z) in density.iter_mut().zip(state.level(lag).iter()) {
                *d *= z.norm_sqr();
            }
        }
        let tau = (rho + 1) as f64 * self.spec.dt / 2.0;
        self.linear_step(density, state.level(rho), state.current(), tau, strategy, cfg)
            .map_err(|e| e.at_step(state.step + 1))
    }

    /// Averaged nonlinearity `(a^{rho+1} - b^{rho+1}) / ((rho+1)(a - b))` for
    /// `a = |w|^2`, `b = |u|^2`, written as a mean of monomials so `a = b` is regular.
    fn cn_density(&self, w: &[C64], u: &[C64]) -> Vec<f64> {
        let rho = self.spec.rho;
        w.iter()
            .zip(u)
            .map(|(wk, uk)| {
                let (a, b) = (wk.norm_sqr(), uk.norm_sqr());
                let sum: f64 = (0..=rho as i32).map(|j| a.powi(j) * b.powi(rho as i32 - j)).sum();
                sum / (rho + 1) as f64
            })
            .collect()
    }

    /// Max-norm residual of the Crank–Nicolson equations at `(u1, u0)`.
    /// `max_k |F_k|` together with a bound on the rounding error of evaluating it.
    ///
    /// Rounding noise of size `eps |V|` in every Fourier mode is amplified by
    /// `dt d_max`, so on fine grids with large steps the computed residual of
    /// even the exactly rounded solution sits well above `eps`.
    fn cn_residual(&self, u1: &[C64], u0: &[C64], dt: f64) -> Result<(f64, f64)> {
        let mid: Vec<C64> = u1.iter().zip(u0).map(|(a, b)| 0.5 * (a + b)).collect();
        let lap = self.spectral.apply_multiplier(&mid, &self.symbol)?;
        let g = self.cn_density(u1, u0);
        let residual = (0..u1.len())
            .map(|k| (u1[k] - u0[k] + I * dt * (lap[k] - g[k] * mid[k])).norm())
            .fold(0.0, f64::max);
        let mid_norm = mid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let floor = 4.0 * f64::EPSILON * (1.0 + dt.abs() * self.symbol.max()) * mid_norm;
        Ok((residual, floor))
    }

    /// One nonlinear Crank–Nicolson step of size `dt` by Picard iteration.
    pub fn cn_step(
        &self,
        u0: &[C64],
        dt: f64,
        strategy: Strategy,
        cfg: &SolverConfig,
        nl: &NonlinearConfig,
    ) -> Result<(StateVector, CnDiagnostics)> {
        Error::check_len(self.spec.grid.n(), u0.len())?;
        let mut iterate = StateVector::new(u0.to_vec());
        let mut diag = CnDiagnostics {
            sweeps: 0,
            residual: f64::INFINITY,
            floor: 0.0,
            linear_iterations: 0,
        };
        // The nonlinear residual cannot drop below the inner solve accuracy.
        let inner = SolverConfig {
            rel_tol: cfg.rel_tol.min(1e-3 * nl.tol).max(1e-14),
            ..*cfg
        };
        while diag.sweeps < nl.max_sweeps {
            let density = self.cn_density(&iterate, u0);
            let (next, report) = self.linear_step(density, u0, &iterate, 0.5 * dt, strategy, &inner)?;
            if !report.converged {
                return Err(Error::NotConverged { step: 1, report });
            }
            diag.sweeps += 1;
            diag.linear_iterations += report.iterations;
            (diag.residual, diag.floor) = self.cn_residual(&next, u0, dt)?;
            iterate = next;
            if diag.residual <= nl.tol.max(diag.floor) {
                return Ok((iterate, diag));
            }
        }
        Err(Error::FixedPoint {
            sweeps: diag.sweeps,
            residual: diag.residual,
            last_iterate: iterate.into_inner(),
        })
    }

    /// Starting value `U^(1)` from `U^(0)`.
    pub fn cn_start(&self, u0: &[C64], strategy: Strategy, cfg: &SolverConfig, nl: &NonlinearConfig) -> Result<(StateVector, CnDiagnostics)> {
        self.cn_step(u0, self.spec.dt, strategy, cfg, nl)
    }

    fn record(&self, traj: &mut Trajectory, state: &SchemeState, probes: &Probes, last: usize) -> Result<()> {
        let rho = self.spec.rho;
        if probes.invariants {
            let prev = (state.depth() > 1).then(|| state.level(1).as_slice());
            traj.samples.push(self.invariants.sample(state.time(), state.current(), prev)?);
            let window = if state.depth() > rho {
                let levels: Vec<&[C64]> = state.levels().take(rho + 1).map(|s| s.as_slice()).collect();
                Some(self.invariants.energy_rho(&levels, rho)?)
            } else {
                None
            };
            traj.window_energy.push(window);
        }
        if probes.wants(state.step, last) {
            traj.snapshots.push(Snapshot {
                step: state.step,
                time: state.time(),
                state: state.current().clone(),
            });
        }
        Ok(())
    }

    /// Runs the multistep scheme to `t_end`. On a failure the trajectory up to
    /// the last good level is returned together with the error.
    pub fn integrate_partial(
        &self,
        strategy: Strategy,
        cfg: &SolverConfig,
        nl: &NonlinearConfig,
        probes: &Probes,
    ) -> (Trajectory, Option<Error>) {
        let rho = self.spec.rho;
        let last = self.spec.steps();
        let mut traj = Trajectory {
            dt: self.spec.dt,
            ..Trajectory::default()
        };
        let mut state = SchemeState::new(0, self.spec.dt, vec![self.initial_state()]);
        let result = (|| -> Result<()> {
            self.record(&mut traj, &state, probes, last)?;
            while state.step < last {
                if state.step < rho {
                    let (next, diag) = self
                        .cn_start(state.current(), strategy, cfg, nl)
                        .map_err(|e| e.at_step(state.step + 1))?;
                    traj.starter.push(diag);
                    state.advance(next, rho + 1);
                } else {
                    let clock = Instant::now();
                    let solved = if rho == 1 {
                        self.li_step(&state, strategy, cfg)
                    } else {
                        self.li_rho_step(&state, strategy, cfg)
                    };
                    traj.stepping_time += clock.elapsed();
                    let (next, report) = solved?;
                    let step = state.step + 1;
                    let converged = report.converged;
                    traj.reports.push(StepReport {
                        step,
                        report: report.clone(),
                    });
                    if !converged {
                        return Err(Error::NotConverged { step, report });
                    }
                    state.advance(next, rho + 1);
                }
                self.record(&mut traj, &state, probes, last)?;
            }
            Ok(())
        })();
        traj.final_step = state.step;
        traj.final_state = state.current().clone();
        (traj, result.err())
    }

    pub fn integrate(&self, strategy: Strategy, cfg: &SolverConfig, nl: &NonlinearConfig, probes: &Probes) -> Result<Trajectory> {
        match self.integrate_partial(strategy, cfg, nl, probes) {
            (traj, None) => Ok(traj),
            (_, Some(err)) => Err(err),
        }
    }

    /// Fully nonlinear Crank–Nicolson integration to `t_end`, used for reference solutions.
    pub fn cn_integrate(&self, strategy: Strategy, cfg: &SolverConfig, nl: &NonlinearConfig, probes: &Probes) -> Result<Trajectory> {
        let last = self.spec.steps();
        let mut traj = Trajectory {
            dt: self.spec.dt,
            ..Trajectory::default()
        };
        let mut state = SchemeState::new(0, self.spec.dt, vec![self.initial_state()]);
        self.record(&mut traj, &state, probes, last)?;
        while state.step < last {
            let (next, diag) = self
                .cn_start(state.current(), strategy, cfg, nl)
                .map_err(|e| e.at_step(state.step + 1))?;
            traj.starter.push(diag);
            state.advance(next, 2);
            self.record(&mut traj, &state, probes, last)?;
        }
        traj.final_step = state.step;
        traj.final_state = state.current().clone();
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, alpha: f64, dt: f64, t_end: f64) -> ProblemSpec {
        ProblemSpec {
            grid: Grid::new(20.0, n).unwrap(),
            alpha,
            rho: 1,
            dt,
            t_end,
            initial: InitialCondition::soliton(),
        }
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spec_validation() {
        assert!(spec(31, 1.6, 0.02, 1.0).validate().is_ok());
        assert!(spec(31, 1.0, 0.02, 1.0).validate().is_err());
        assert!(spec(31, 1.6, 0.0, 1.0).validate().is_err());
        assert!(spec(31, 1.6, 0.02, 0.01).validate().is_err());
        let mut s = spec(31, 1.6, 0.02, 1.0);
        s.rho = 0;
        assert!(s.validate().is_err());
        assert_eq!(spec(31, 1.6, 0.02, 250.0).steps(), 12_500);
    }

    #[test]
    fn strategy_names_roundtrip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("TRANSFORMED_PRECOND_BICGSTAB".parse::<Strategy>().unwrap(), Strategy::TransformedPrecondBicgstab);
        assert!("gmres".parse::<Strategy>().is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut s = spec(31, 1.6, 0.02, 0.1);
        s.initial.amplitude = 0.0;
        let scheme = Scheme::new(s).unwrap();
        let cfg = SolverConfig::default();
        let zero = StateVector::zeros(31);
        let (u1, _) = scheme
            .cn_start(&zero, Strategy::OriginalCocg, &cfg, &NonlinearConfig::default())
            .unwrap();
        assert!(u1.iter().all(|z| z.norm() == 0.0));
        let state = SchemeState::new(1, 0.02, vec![zero.clone(), zero.clone()]);
        let (u2, _) = scheme.li_step(&state, Strategy::OriginalCocg, &cfg).unwrap();
        assert!(u2.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn cn_density_matches_closed_form() {
        let mut s = spec(31, 1.6, 0.02, 0.1);
        for rho in 1..=3 {
            s.rho = rho;
            let scheme = Scheme::new(s).unwrap();
            let w = [C64::new(0.9, 0.4), C64::new(0.0, 0.0), C64::new(0.3, 0.0)];
            let u = [C64::new(0.2, -1.1), C64::new(0.5, 0.5), C64::new(0.3, 0.0)];
            let g = scheme.cn_density(&w, &u);
            for k in 0..3 {
                let (a, b) = (w[k].norm_sqr(), u[k].norm_sqr());
                let want = if (a - b).abs() < 1e-14 {
                    a.powi(rho as i32)
                } else {
                    (a.powi(rho as i32 + 1) - b.powi(rho as i32 + 1)) / ((rho + 1) as f64 * (a - b))
                };
                assert!((g[k] - want).abs() < 1e-13, "rho {rho} k {k}: {} vs {want}", g[k]);
            }
        }
    }

    #[test]
    fn starter_meets_nonlinear_tolerance_and_conserves() {
        let scheme = Scheme::new(spec(101, 1.6, 0.02, 0.02)).unwrap();
        let u0 = scheme.initial_state();
        let (u1, diag) = scheme
            .cn_start(&u0, Strategy::OriginalCocg, &SolverConfig::default(), &NonlinearConfig::default())
            .unwrap();
        assert!(diag.residual <= 1e-10);
        let inv = scheme.invariants();
        assert!((inv.mass(&u1).unwrap() - inv.mass(&u0).unwrap()).abs() < 1e-9);
        assert!((inv.energy_single(&u1).unwrap() - inv.energy_single(&u0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn picard_cap_reports_fixed_point_error() {
        let scheme = Scheme::new(spec(31, 2.0, 0.5, 0.5)).unwrap();
        let u0 = scheme.initial_state();
        let nl = NonlinearConfig { tol: 1e-14, max_sweeps: 2 };
        let err = scheme
            .cn_start(&u0, Strategy::OriginalCocg, &SolverConfig::default(), &nl)
            .unwrap_err();
        match err {
            Error::FixedPoint { sweeps, last_iterate, .. } => {
                assert_eq!(sweeps, 2);
                assert_eq!(last_iterate.len(), 31);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn li_step_conserves_mass_and_two_step_energy() {
        let scheme = Scheme::new(spec(101, 1.6, 0.02, 0.1)).unwrap();
        let cfg = SolverConfig::default();
        let u0 = scheme.initial_state();
        let (u1, _) = scheme
            .cn_start(&u0, Strategy::OriginalCocg, &cfg, &NonlinearConfig::default())
            .unwrap();
        let mut state = SchemeState::new(1, 0.02, vec![u1, u0]);
        let inv = scheme.invariants();
        for _ in 0..5 {
            let (next, report) = scheme.li_step(&state, Strategy::OriginalCocg, &cfg).unwrap();
            assert!(report.converged);
            let m_new = inv.mass(&next).unwrap();
            let m_old = inv.mass(state.level(1)).unwrap();
            assert!((m_new - m_old).abs() < 1e-9);
            let h_new = inv.energy_two_step(&next, state.current()).unwrap();
            let h_old = inv.energy_two_step(state.current(), state.level(1)).unwrap();
            assert!((h_new - h_old).abs() < 1e-8);
            state.advance(next, 2);
        }
    }

    #[test]
    fn rho_one_step_is_identical_to_li_step() {
        let scheme = Scheme::new(spec(31, 1.2, 0.05, 0.1)).unwrap();
        let cfg = SolverConfig::default();
        let u0 = scheme.initial_state();
        let (u1, _) = scheme
            .cn_start(&u0, Strategy::OriginalCocg, &cfg, &NonlinearConfig::default())
            .unwrap();
        let state = SchemeState::new(1, 0.05, vec![u1, u0]);
        for strategy in Strategy::ALL {
            let (a, ra) = scheme.li_step(&state, strategy, &cfg).unwrap();
            let (b, rb) = scheme.li_rho_step(&state, strategy, &cfg).unwrap();
            assert_eq!(a, b);
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn scheme_is_time_symmetric() {
        let scheme = Scheme::new(spec(101, 1.6, 0.02, 0.1)).unwrap();
        let cfg = SolverConfig {
            rel_tol: 1e-13,
            ..SolverConfig::default()
        };
        let u0 = scheme.initial_state();
        let (u1, _) = scheme
            .cn_start(&u0, Strategy::OriginalCocg, &cfg, &NonlinearConfig::default())
            .unwrap();
        let density: Vec<f64> = u1.iter().map(|z| z.norm_sqr()).collect();
        let (u2, _) = scheme
            .linear_step(density.clone(), &u0, &u1, 0.02, Strategy::OriginalCocg, &cfg)
            .unwrap();
        let (back, _) = scheme
            .linear_step(density, &u2, &u1, -0.02, Strategy::OriginalCocg, &cfg)
            .unwrap();
        assert!(max_diff(&back, &u0) < 1e-9);
    }

    #[test]
    fn single_step_run_holds_only_the_starter() {
        let scheme = Scheme::new(spec(31, 1.6, 0.02, 0.02)).unwrap();
        let traj = scheme
            .integrate(Strategy::OriginalCocg, &SolverConfig::default(), &NonlinearConfig::default(), &Probes::default())
            .unwrap();
        assert_eq!(traj.samples.len(), 2);
        assert_eq!(traj.snapshots.len(), 2);
        assert!(traj.reports.is_empty());
        assert_eq!(traj.starter.len(), 1);
        assert_eq!(traj.final_step, 1);
    }

    #[test]
    fn odd_and_even_levels_keep_their_mass() {
        let scheme = Scheme::new(spec(61, 1.6, 0.05, 2.0)).unwrap();
        let traj = scheme
            .integrate(Strategy::OriginalCocg, &SolverConfig::default(), &NonlinearConfig::default(), &Probes::none())
            .unwrap();
        assert!(traj.samples.is_empty());
        let probes = Probes {
            snapshot_every: None,
            ..Probes::default()
        };
        let traj = scheme
            .integrate(Strategy::OriginalCocg, &SolverConfig::default(), &NonlinearConfig::default(), &probes)
            .unwrap();
        let m0 = traj.samples[0].mass;
        let m1 = traj.samples[1].mass;
        for (n, s) in traj.samples.iter().enumerate() {
            let reference = if n % 2 == 0 { m0 } else { m1 };
            assert!((s.mass - reference).abs() < 1e-9, "level {n}");
        }
    }
}
