//! Evolves the soliton and writes a result bundle.
//!
//! cargo run --release --example soliton_evolve -- [alpha] [out_dir]

use fnls::experiments::{run_evolve, ExperimentKind, RunConfig};

fn main() -> fnls::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = RunConfig::for_kind(ExperimentKind::Evolve);
    if let Some(alpha) = args.first() {
        cfg.alpha = alpha.parse().expect("alpha");
    }
    cfg.out_dir = args.get(1).map_or_else(|| std::env::temp_dir().join("fnls-evolve"), Into::into);
    let bundle = run_evolve(&cfg)?;
    for (k, v) in &bundle.meta {
        println!("{k} = {v}");
    }
    println!("wrote {} files to {}", bundle.files.len(), bundle.dir.display());
    Ok(())
}
