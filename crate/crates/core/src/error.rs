use thiserror::Error;

use crate::krylov::SolverReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("krylov breakdown after {} iterations: {reason}", report.iterations)]
    Breakdown {
        reason: &'static str,
        report: SolverReport,
    },

    #[error("linear solve failed at step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear solve did not converge at step {step} ({} iterations, residual {:.3e})",
        report.iterations, report.final_residual())]
    NotConverged { step: usize, report: SolverReport },

    #[error("fixed-point iteration stalled after {sweeps} sweeps (residual {residual:.3e})")]
    FixedPoint {
        sweeps: usize,
        residual: f64,
        last_iterate: Vec<num_complex::Complex64>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got })
        }
    }

    /// Attaches a time-step index to a solver failure.
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            e @ (Error::Step { .. } | Error::NotConverged { .. }) => e,
            other => Error::Step {
                step,
                source: Box::new(other),
            },
        }
    }

    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Breakdown { .. } | Error::NotConverged { .. } | Error::FixedPoint { .. } => true,
            Error::Step { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
