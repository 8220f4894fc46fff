//! Error at t = 20 against a fine Crank-Nicolson reference and the fitted order.

use fnls::experiments::{convergence_study, ExperimentKind, RunConfig};

fn main() -> fnls::Result<()> {
    let cfg = RunConfig::for_kind(ExperimentKind::Convergence);
    let study = convergence_study(&cfg)?;
    println!("{:>8} {:>12}", "dt", "max error");
    for (dt, err) in &study.rows {
        println!("{dt:>8} {err:>12.4e}");
    }
    println!("slope {:.3}", study.slope);
    Ok(())
}
