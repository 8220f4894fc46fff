//! Experiment harness: configuration, runs and CSV result bundles.

mod config;
mod runs;

pub use config::{pairs, parse_override, ExperimentKind, RunConfig};
pub use runs::{
    bench_strategy, convergence_study, fit_slope, max_drift, reference_solution, run, run_convergence, run_evolve,
    run_invariant_drift, run_rho_demo, run_solver_bench, BenchRun, ConvergenceStudy, IterationStats, ResultBundle,
};
