//! Three-step scheme for the quintic nonlinearity: mass and window energy per level.

use fnls::experiments::{ExperimentKind, RunConfig};
use fnls::{Probes, Scheme};

fn main() -> fnls::Result<()> {
    let cfg = RunConfig::for_kind(ExperimentKind::RhoDemo);
    let scheme = Scheme::new(cfg.problem()?)?;
    let traj = scheme.integrate(cfg.strategy, &cfg.solver(), &cfg.nonlinear(), &Probes::default())?;
    let rho = cfg.rho;
    for (n, s) in traj.samples.iter().enumerate().step_by(20) {
        let window = traj.window_energy[n].map_or("-".to_string(), |h| format!("{h:.12}"));
        println!("n = {n:>3}  t = {:>5.2}  M = {:.12}  H^rho = {window}", s.time, s.mass);
    }
    let last = traj.samples.len() - 1;
    let dm = (rho + 1..=last)
        .map(|k| (traj.samples[k].mass - traj.samples[k - rho - 1].mass).abs())
        .fold(0.0, f64::max);
    println!("max |M(n+1) - M(n-{rho})| = {dm:.2e}");
    Ok(())
}
