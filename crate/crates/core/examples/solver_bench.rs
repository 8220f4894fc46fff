//! Iteration counts of each strategy on the soliton problem.
//!
//! cargo run --release --example solver_bench -- [dt] [width] [N...]

use fnls::experiments::{bench_strategy, ExperimentKind, RunConfig};
use fnls::Strategy;

fn main() -> fnls::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = RunConfig::for_kind(ExperimentKind::SolverBench);
    if let Some(dt) = args.first() {
        cfg.dt = dt.parse().expect("dt");
    }
    if let Some(w) = args.get(1) {
        cfg.initial.width = w.parse().expect("width");
    }
    let sizes: Vec<usize> = if args.len() > 2 {
        args[2..].iter().map(|s| s.parse().expect("N")).collect()
    } else {
        vec![401]
    };
    println!("{:<28} {:>5} {:>5} {:>4} {:>4} {:>8} {:>8}", "strategy", "N", "steps", "max", "min", "avg", "matvecs");
    for &n in &sizes {
        for strategy in Strategy::ALL {
            let run = bench_strategy(&cfg, strategy, n)?;
            match run.stats {
                Some(s) => println!(
                    "{:<28} {:>5} {:>5} {:>4} {:>4} {:>8.4} {:>8}",
                    strategy.name(), n, s.steps, s.max, s.min, s.mean, s.matvecs
                ),
                None => println!("{:<28} {:>5} no multistep solves", strategy.name(), n),
            }
            if let Some(step) = run.failed_at_step {
                println!("    failed at step {step}");
            }
        }
    }
    Ok(())
}
