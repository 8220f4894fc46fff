//! Long run tracking the single-level energy, which the scheme does not conserve.

use fnls::experiments::{max_drift, ExperimentKind, RunConfig};
use fnls::{Probes, Scheme};

fn main() -> fnls::Result<()> {
    let cfg = RunConfig::for_kind(ExperimentKind::Drift);
    let scheme = Scheme::new(cfg.problem()?)?;
    let probes = Probes {
        snapshot_every: None,
        ..Probes::default()
    };
    let traj = scheme.integrate(cfg.strategy, &cfg.solver(), &cfg.nonlinear(), &probes)?;
    for horizon in [50.0, 100.0, 200.0, 250.0, 300.0, 350.0, 400.0] {
        let (mass, energy) = max_drift(&traj, horizon);
        println!("t <= {horizon:>5}: max |dM| = {mass:.2e}  max |dH~| = {energy:.3e}");
    }
    Ok(())
}
