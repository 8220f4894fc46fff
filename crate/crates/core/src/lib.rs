//! Linearly implicit, mass- and energy-preserving Fourier pseudo-spectral solver
//! for the space-fractional nonlinear Schrödinger equation
//!
//! ```text
//! u_t = -i (-Δ)^{α/2} u + i |u|^{2ρ} u,   x on a periodic interval of length L,
//! ```
//!
//! with matrix-free complex-symmetric Krylov solvers (COCG, COCR, Bi-CGSTAB)
//! and a Fourier-diagonal preconditioner for the per-step linear systems.
//!
//! Module map:
//!
//! * [`spectral`]: grid, unitary DFT, fractional Laplacian multipliers
//! * [`invariants`]: discrete mass and energies
//! * [`operators`]: step operator, its Fourier-space form, preconditioners
//! * [`krylov`]: COCG / COCR / Bi-CGSTAB
//! * [`schemes`]: Crank–Nicolson starter, linearly implicit steps, integration loop
//! * [`experiments`]: configuration files, CSV result bundles, the experiment runs
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod experiments;
pub mod invariants;
pub mod krylov;
pub mod operators;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
pub use invariants::{discrete_mass, InvariantSample, Invariants};
pub use krylov::{Method, SolverConfig, SolverReport};
pub use num_complex::Complex64 as C64;
pub use operators::{DiagonalPreconditioner, StepOperator, TransformedOperator};
pub use schemes::{InitialCondition, NonlinearConfig, Probes, ProblemSpec, Scheme, SchemeState, Strategy, Trajectory};
pub use spectral::{FractionalSymbol, Grid, Spectral, SpectralCoeffs, StateVector};
