//! Discrete mass and energy functionals.
//!
//! Sums use compensated accumulation in a fixed index order so that drift
//! series at the `1e-10` level are not dominated by rounding.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spectral::{FractionalSymbol, Grid, Spectral};

/// One row of an invariant time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSample {
    pub time: f64,
    pub mass: f64,
    /// `H_d(U^(n), U^(n-1))`; absent at step 0.
    pub two_step_energy: Option<f64>,
    pub single_step_energy: f64,
}

/// Kahan–Babuska (Neumaier) summation in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("Levy index must lie in (1, 2], got {alpha}")))
    }
}

/// `dx * sum |U_k|^2`.
pub fn discrete_mass(u: &[C64], grid: &Grid) -> Result<f64> {
    Error::check_len(grid.n(), u.len())?;
    Ok(grid.dx() * compensated_sum(u.iter().map(|z| z.norm_sqr())))
}

/// Energy functionals for a fixed grid and Levy index.
#[derive(Debug, Clone)]
pub struct Invariants {
    spectral: Spectral,
    quarter: FractionalSymbol,
    alpha: f64,
}

impl Invariants {
    pub fn new(spectral: &Spectral, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            spectral: spectral.clone(),
            quarter: spectral.symbol(alpha / 2.0)?,
            alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn mass(&self, u: &[C64]) -> Result<f64> {
        discrete_mass(u, self.grid())
    }

    /// Pointwise `|(quarter-power Laplacian of u)_k|^2`.
    fn gradient_density(&self, u: &[C64]) -> Result<Vec<f64>> {
        let lu = self.spectral.apply_multiplier(u, &self.quarter)?;
        Ok(lu.iter().map(|z| z.norm_sqr()).collect())
    }

    /// Two-level energy `H_d(U, V)`, exactly symmetric in its arguments.
    pub fn energy_two_step(&self, u: &[C64], v: &[C64]) -> Result<f64> {
        Error::check_len(self.grid().n(), v.len())?;
        let gu = self.gradient_density(u)?;
        let gv = self.gradient_density(v)?;
        let terms = (0..u.len()).map(|k| {
            let kinetic = gu[k] + gv[k];
            let potential = u[k].norm_sqr() * v[k].norm_sqr();
            -0.5 * kinetic + 0.5 * potential
        });
        Ok(self.grid().dx() * compensated_sum(terms))
    }

    /// Single-level energy `H_d(U, U)`.
    pub fn energy_single(&self, u: &[C64]) -> Result<f64> {
        self.energy_two_step(u, u)
    }

    /// `(rho+1)`-level energy over a window `[U^(n), ..., U^(n-rho)]`.
    pub fn energy_rho(&self, history: &[&[C64]], rho: usize) -> Result<f64> {
        if rho == 0 || history.len() != rho + 1 {
            return Err(Error::Domain(format!(
                "energy window needs rho + 1 = {} levels, got {} (rho = {rho})",
                rho + 1,
                history.len()
            )));
        }
        let n = self.grid().n();
        for level in history {
            Error::check_len(n, level.len())?;
        }
        let grads = history
            .iter()
            .map(|u| self.gradient_density(u))
            .collect::<Result<Vec<_>>>()?;
        let weight = 1.0 / (rho + 1) as f64;
        let terms = (0..n).map(|k| {
            let kinetic: f64 = grads.iter().map(|g| g[k]).sum();
            let potential: f64 = history.iter().map(|u| u[k].norm_sqr()).product();
            weight * (potential - kinetic)
        });
        Ok(self.grid().dx() * compensated_sum(terms))
    }

    /// Builds an [`InvariantSample`] for level `current` preceded by `previous`.
    pub fn sample(&self, time: f64, current: &[C64], previous: Option<&[C64]>) -> Result<InvariantSample> {
        Ok(InvariantSample {
            time,
            mass: self.mass(current)?,
            two_step_energy: previous.map(|p| self.energy_two_step(current, p)).transpose()?,
            single_step_energy: self.energy_single(current)?,
        })
    }
}
