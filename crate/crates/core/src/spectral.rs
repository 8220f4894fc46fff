//! Periodic grid, unitary DFT and Fourier multipliers for fractional Laplacian powers.
//!
//! All transforms use the unitary convention: both directions carry a factor
//! `1/sqrt(N)`, so Parseval holds without extra weights. Wavenumbers follow the
//! standard DFT ordering `0, 1, ..., (N-1)/2, -(N-1)/2, ..., -1`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform grid on the torus `R / L Z` with an odd number of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!("domain length must be positive, got {length}")));
        }
        if n == 0 || n % 2 == 0 {
            return Err(Error::Domain(format!("grid size must be odd and positive, got {n}")));
        }
        Ok(Self { length, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn mu(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Signed wavenumber index of DFT slot `p`.
    pub fn wavenumber(&self, p: usize) -> i64 {
        if p <= (self.n - 1) / 2 {
            p as i64
        } else {
            p as i64 - self.n as i64
        }
    }

    /// Samples `f` at the grid nodes.
    pub fn sample(&self, f: impl Fn(f64) -> C64) -> StateVector {
        StateVector(self.nodes().map(f).collect())
    }
}

macro_rules! complex_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<C64>);

        impl $name {
            pub fn new(values: Vec<C64>) -> Self {
                Self(values)
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![C64::new(0.0, 0.0); n])
            }

            pub fn into_inner(self) -> Vec<C64> {
                self.0
            }

            pub fn as_slice(&self) -> &[C64] {
                &self.0
            }
        }

        impl Deref for $name {
            type Target = [C64];
            fn deref(&self) -> &[C64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [C64] {
                &mut self.0
            }
        }

        impl From<Vec<C64>> for $name {
            fn from(v: Vec<C64>) -> Self {
                Self(v)
            }
        }

        impl FromIterator<C64> for $name {
            fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
                Self(iter.into_iter().collect())
            }
        }
    };
}

complex_vector!(
    /// Field samples `U_k` at the grid nodes for one time level.
    StateVector
);
complex_vector!(
    /// Unitary DFT coefficients in standard `0..N` ordering.
    SpectralCoeffs
);

/// Diagonal Fourier multiplier `d_p = |mu k_p|^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSymbol {
    exponent: f64,
    entries: Vec<f64>,
}

impl FractionalSymbol {
    pub fn build(grid: &Grid, exponent: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::Domain(format!("symbol exponent must be positive, got {exponent}")));
        }
        let mu = grid.mu();
        let entries = (0..grid.n())
            .map(|p| abs_pow(mu * grid.wavenumber(p) as f64, exponent))
            .collect();
        Ok(Self { exponent, entries })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// `|x|^s` via `exp(s ln|x|)`, with `0^s = 0`.
fn abs_pow(x: f64, s: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else {
        (s * a.ln()).exp()
    }
}

/// Planned unitary transforms for one grid. Cheap to clone; plans are shared.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n());
        let inverse = planner.plan_fft_inverse(grid.n());
        Self {
            grid,
            forward,
            inverse,
            scale: 1.0 / (grid.n() as f64).sqrt(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn symbol(&self, exponent: f64) -> Result<FractionalSymbol> {
        FractionalSymbol::build(&self.grid, exponent)
    }

    pub fn forward_in_place(&self, buf: &mut [C64]) -> Result<()> {
        Error::check_len(self.n(), buf.len())?;
        self.forward.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
        Ok(())
    }

    pub fn inverse_in_place(&self, buf: &mut [C64]) -> Result<()> {
        Error::check_len(self.n(), buf.len())?;
        self.inverse.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
        Ok(())
    }

    pub fn forward(&self, u: &[C64]) -> Result<SpectralCoeffs> {
        let mut buf = u.to_vec();
        self.forward_in_place(&mut buf)?;
        Ok(SpectralCoeffs(buf))
    }

    pub fn inverse(&self, c: &[C64]) -> Result<StateVector> {
        let mut buf = c.to_vec();
        self.inverse_in_place(&mut buf)?;
        Ok(StateVector(buf))
    }

    /// Writes `F^{-1} diag(symbol) F u` into `out`.
    pub fn apply_multiplier_into(&self, u: &[C64], symbol: &FractionalSymbol, out: &mut [C64]) -> Result<()> {
        Error::check_len(self.n(), symbol.len())?;
        Error::check_len(self.n(), out.len())?;
        Error::check_len(self.n(), u.len())?;
        out.copy_from_slice(u);
        self.forward_in_place(out)?;
        out.iter_mut().zip(symbol.entries()).for_each(|(z, &d)| *z *= d);
        self.inverse_in_place(out)
    }

    pub fn apply_multiplier(&self, u: &[C64], symbol: &FractionalSymbol) -> Result<StateVector> {
        let mut out = vec![C64::new(0.0, 0.0); self.n()];
        self.apply_multiplier_into(u, symbol, &mut out)?;
        Ok(StateVector(out))
    }
}
