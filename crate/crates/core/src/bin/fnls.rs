//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fnls::experiments::{parse_override, run, ExperimentKind, RunConfig};

#[derive(Parser)]
#[command(name = "fnls", version, about = "Fractional NLS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one problem and write snapshots, invariants and solver data.
    Evolve(Common),
    /// Time-step sweep against a fine Crank-Nicolson reference.
    Convergence(Common),
    /// Iteration counts of each solver strategy over several grid sizes.
    SolverBench(Common),
    /// Long run for the invariant drift series.
    Drift(Common),
    /// Higher-order nonlinearity with the multistep scheme.
    RhoDemo(Common),
}

#[derive(Args)]
struct Common {
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value, applied after the config file
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn build(kind: ExperimentKind, args: &Common) -> fnls::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_text(kind, &std::fs::read_to_string(path)?)?,
        None => RunConfig::for_kind(kind),
    };
    for o in &args.overrides {
        let (k, v) = parse_override(o)?;
        cfg.set(&k, &v)?;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Evolve(a) => (ExperimentKind::Evolve, a),
        Command::Convergence(a) => (ExperimentKind::Convergence, a),
        Command::SolverBench(a) => (ExperimentKind::SolverBench, a),
        Command::Drift(a) => (ExperimentKind::Drift, a),
        Command::RhoDemo(a) => (ExperimentKind::RhoDemo, a),
    };
    let result = build(kind, args).and_then(|cfg| run(&cfg));
    match result {
        Ok(bundle) => {
            for f in &bundle.files {
                println!("{}", f.display());
            }
            if let Some(msg) = &bundle.failure {
                eprintln!("fnls: {msg}");
            }
            ExitCode::from(bundle.exit_code as u8)
        }
        Err(err) => {
            eprintln!("fnls: {err}");
            ExitCode::from(if err.is_numerical() { 3 } else { 2 })
        }
    }
}
