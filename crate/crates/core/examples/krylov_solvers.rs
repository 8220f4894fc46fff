//! One time-step system solved by every strategy.

use std::sync::Arc;

use fnls::krylov::SolverConfig;
use fnls::schemes::solve_step_system;
use fnls::{Grid, InitialCondition, Spectral, StepOperator, Strategy};

fn main() -> fnls::Result<()> {
    let grid = Grid::new(20.0, 401)?;
    let spectral = Spectral::new(grid.clone());
    let symbol = Arc::new(spectral.symbol(2.0)?);
    let u = InitialCondition::soliton().sample(&grid);
    let op = StepOperator::from_state(&spectral, symbol, 0.02, &u)?;
    let rhs = op.rhs_build(&u)?;
    for strategy in Strategy::ALL {
        let cfg = strategy.solver_config(&SolverConfig::default());
        match solve_step_system(&op, &rhs, &u, strategy, &cfg) {
            Ok((_, report)) => println!(
                "{:<28} iterations {:>4}  matvecs {:>4}  residual {:.2e}  converged {}",
                strategy.name(),
                report.iterations,
                report.matvec_count,
                report.final_residual(),
                report.converged
            ),
            Err(e) => println!("{:<28} {e}", strategy.name()),
        }
    }
    Ok(())
}
