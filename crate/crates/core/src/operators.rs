//! Matrix-free operators for one time step.
//!
//! The step matrix is `A = I + i dt (F^{-1} D_alpha F - D(U))` where `D(U)` is a
//! real diagonal density. In Fourier variables `y = F x` the same system reads
//! `(I + i dt D_alpha - i dt F D(U) F^{-1}) y = F b`, whose leading part is the
//! diagonal preconditioner `M = I + i dt D_alpha`.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spectral::{FractionalSymbol, Spectral, SpectralCoeffs, StateVector};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Frozen coefficient matrix of one linear step.
#[derive(Debug, Clone)]
pub struct StepOperator {
    spectral: Spectral,
    symbol: Arc<FractionalSymbol>,
    dt: f64,
    density: Vec<f64>,
}

impl StepOperator {
    /// `density` is the diagonal of `D(U)`; entries must be finite and nonnegative.
    pub fn new(spectral: &Spectral, symbol: Arc<FractionalSymbol>, dt: f64, density: Vec<f64>) -> Result<Self> {
        let n = spectral.n();
        Error::check_len(n, symbol.len())?;
        Error::check_len(n, density.len())?;
        if !dt.is_finite() {
            return Err(Error::Domain(format!("time step must be finite, got {dt}")));
        }
        if let Some(bad) = density.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::Domain(format!("density entries must be finite and >= 0, got {bad}")));
        }
        Ok(Self {
            spectral: spectral.clone(),
            symbol,
            dt,
            density,
        })
    }

    /// Operator with density `|u_k|^2`.
    pub fn from_state(spectral: &Spectral, symbol: Arc<FractionalSymbol>, dt: f64, u: &[C64]) -> Result<Self> {
        Self::new(spectral, symbol, dt, u.iter().map(|z| z.norm_sqr()).collect())
    }

    pub fn n(&self) -> usize {
        self.density.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn symbol(&self) -> &FractionalSymbol {
        &self.symbol
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `out = A v`. One forward and one inverse transform.
    ///
    /// Panics if the slice lengths differ from the grid size.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.n());
        self.laplacian_into(v, out);
        let idt = I * self.dt;
        for ((o, &x), &rho) in out.iter_mut().zip(v).zip(&self.density) {
            *o = x + idt * (*o - rho * x);
        }
    }

    fn laplacian_into(&self, v: &[C64], out: &mut [C64]) {
        self.spectral
            .apply_multiplier_into(v, &self.symbol, out)
            .expect("operator dimensions checked at construction");
    }

    pub fn step_apply(&self, v: &[C64]) -> Result<StateVector> {
        Error::check_len(self.n(), v.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.n()];
        self.apply_into(v, &mut out);
        Ok(out.into())
    }

    /// Right-hand side `(I - i dt (Lambda - D)) u_prev`, i.e. `2 u_prev - A u_prev`.
    pub fn rhs_build(&self, u_prev: &[C64]) -> Result<StateVector> {
        Error::check_len(self.n(), u_prev.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.n()];
        self.laplacian_into(u_prev, &mut out);
        let idt = I * self.dt;
        for ((o, &x), &rho) in out.iter_mut().zip(u_prev).zip(&self.density) {
            *o = x - idt * (*o - rho * x);
        }
        Ok(out.into())
    }

    pub fn transformed(&self) -> TransformedOperator<'_> {
        TransformedOperator { op: self }
    }

    pub fn preconditioner(&self) -> DiagonalPreconditioner {
        DiagonalPreconditioner::new(&self.symbol, self.dt)
    }

    /// Diagonal of `A` in physical space, for Jacobi scaling of the original system.
    ///
    /// The diagonal of `F^{-1} D_alpha F` is the mean of the symbol.
    pub fn jacobi(&self) -> JacobiPreconditioner {
        let mean = self.symbol.entries().iter().sum::<f64>() / self.n() as f64;
        JacobiPreconditioner {
            inverse: self
                .density
                .iter()
                .map(|&rho| (C64::new(1.0, 0.0) + I * self.dt * (mean - rho)).inv())
                .collect(),
        }
    }
}

/// `F A F^{-1}`, acting on Fourier coefficients.
#[derive(Debug, Clone, Copy)]
pub struct TransformedOperator<'a> {
    op: &'a StepOperator,
}

impl TransformedOperator<'_> {
    pub fn n(&self) -> usize {
        self.op.n()
    }

    /// `out = (I + i dt D_alpha) y - i dt F (D(U) F^{-1} y)`.
    pub fn apply_into(&self, y: &[C64], out: &mut [C64]) {
        assert_eq!(y.len(), self.n());
        let sp = &self.op.spectral;
        out.copy_from_slice(y);
        sp.inverse_in_place(out).expect("length checked");
        out.iter_mut().zip(&self.op.density).for_each(|(z, &rho)| *z *= rho);
        sp.forward_in_place(out).expect("length checked");
        let idt = I * self.op.dt;
        for ((o, &yp), &d) in out.iter_mut().zip(y).zip(self.op.symbol.entries()) {
            *o = yp + idt * (d * yp - *o);
        }
    }

    pub fn transformed_apply(&self, y: &[C64]) -> Result<SpectralCoeffs> {
        Error::check_len(self.n(), y.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.n()];
        self.apply_into(y, &mut out);
        Ok(out.into())
    }
}

/// `M = I + i dt D_alpha` in Fourier space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPreconditioner {
    entries: Vec<C64>,
}

impl DiagonalPreconditioner {
    pub fn new(symbol: &FractionalSymbol, dt: f64) -> Self {
        Self {
            entries: symbol.entries().iter().map(|&d| C64::new(1.0, dt * d)).collect(),
        }
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// `z = M^{-1} r`, entrywise.
    pub fn solve_into(&self, r: &[C64], z: &mut [C64]) {
        for ((zp, &rp), &m) in z.iter_mut().zip(r).zip(&self.entries) {
            *zp = rp / m;
        }
    }

    pub fn precond_solve(&self, r: &[C64]) -> Result<SpectralCoeffs> {
        Error::check_len(self.entries.len(), r.len())?;
        let mut z = vec![C64::new(0.0, 0.0); r.len()];
        self.solve_into(r, &mut z);
        Ok(z.into())
    }
}

/// Inverse diagonal of the original step matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiPreconditioner {
    inverse: Vec<C64>,
}

impl JacobiPreconditioner {
    pub fn solve_into(&self, r: &[C64], z: &mut [C64]) {
        for ((zp, &rp), &m) in z.iter_mut().zip(r).zip(&self.inverse) {
            *zp = rp * m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<C64> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        (0..n).map(|_| c(next(), next())).collect()
    }

    fn setup(n: usize, alpha: f64) -> (Spectral, Arc<FractionalSymbol>) {
        let sp = Spectral::new(Grid::new(20.0, n).unwrap());
        let sym = Arc::new(sp.symbol(alpha).unwrap());
        (sp, sym)
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_step_is_identity() {
        let (sp, sym) = setup(15, 1.6);
        let u = pseudo_random(15, 1);
        let op = StepOperator::from_state(&sp, sym, 0.0, &u).unwrap();
        let v = pseudo_random(15, 2);
        assert_eq!(op.step_apply(&v).unwrap().as_slice(), v.as_slice());
        assert_eq!(op.rhs_build(&v).unwrap().as_slice(), v.as_slice());
    }

    #[test]
    fn fourier_modes_are_eigenvectors_without_density() {
        let (sp, sym) = setup(31, 2.0);
        let grid = *sp.grid();
        let op = StepOperator::new(&sp, sym, 0.3, vec![0.0; 31]).unwrap();
        for k in [1i64, -4, 9] {
            let v = grid.sample(|x| C64::from_polar(1.0, grid.mu() * k as f64 * x));
            let lambda = c(1.0, 0.3 * (grid.mu() * k as f64).powi(2));
            let av = op.step_apply(&v).unwrap();
            for (a, b) in av.iter().zip(v.iter()) {
                assert!((a - lambda * b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rhs_is_two_u_minus_au() {
        let (sp, sym) = setup(31, 1.2);
        let u = pseudo_random(31, 5);
        let op = StepOperator::from_state(&sp, sym, 0.05, &u).unwrap();
        let prev = pseudo_random(31, 6);
        let rhs = op.rhs_build(&prev).unwrap();
        let au = op.step_apply(&prev).unwrap();
        let alt: Vec<C64> = prev.iter().zip(au.iter()).map(|(p, a)| 2.0 * p - a).collect();
        assert!(max_diff(&rhs, &alt) < 1e-13);
    }

    #[test]
    fn transformed_is_similar_to_original() {
        let (sp, sym) = setup(31, 1.6);
        let u = pseudo_random(31, 8);
        let op = StepOperator::from_state(&sp, sym, 0.7, &u).unwrap();
        let v = pseudo_random(31, 9);
        let fv = sp.forward(&v).unwrap();
        let lhs = op.transformed().transformed_apply(&fv).unwrap();
        let rhs = sp.forward(&op.step_apply(&v).unwrap()).unwrap();
        assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn transformed_without_density_is_diagonal() {
        let (sp, sym) = setup(15, 2.0);
        let op = StepOperator::new(&sp, sym.clone(), 0.1, vec![0.0; 15]).unwrap();
        let y = pseudo_random(15, 3);
        let out = op.transformed().transformed_apply(&y).unwrap();
        for ((o, yp), d) in out.iter().zip(&y).zip(sym.entries()) {
            assert!((o - c(1.0, 0.1 * d) * yp).norm() < 1e-14);
        }
    }

    #[test]
    fn preconditioner_divisors() {
        let g = Grid::new(2.0 * PI, 5).unwrap();
        let sym = FractionalSymbol::build(&g, 2.0).unwrap();
        let m = DiagonalPreconditioner::new(&sym, 0.1);
        let want = [c(1.0, 0.0), c(1.0, 0.1), c(1.0, 0.4), c(1.0, 0.4), c(1.0, 0.1)];
        for (a, b) in m.entries().iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(m.entries().iter().all(|z| z.re == 1.0 && z.norm() >= 1.0));
        let z = pseudo_random(5, 4);
        let solved = m.precond_solve(&z).unwrap();
        let back: Vec<C64> = solved.iter().zip(m.entries()).map(|(s, e)| s * e).collect();
        assert!(max_diff(&back, &z) < 1e-15);
        let id = DiagonalPreconditioner::new(&sym, 0.0);
        assert_eq!(id.precond_solve(&z).unwrap().as_slice(), z.as_slice());
        assert!(m.precond_solve(&z[..4]).is_err());
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        let (sp, sym) = setup(15, 1.6);
        assert!(StepOperator::new(&sp, sym.clone(), 0.1, vec![0.0; 14]).is_err());
        assert!(StepOperator::new(&sp, sym.clone(), 0.1, vec![-1.0; 15]).is_err());
        assert!(StepOperator::new(&sp, sym.clone(), f64::NAN, vec![0.0; 15]).is_err());
        let op = StepOperator::new(&sp, sym, 0.1, vec![0.0; 15]).unwrap();
        assert!(op.step_apply(&[c(0.0, 0.0); 3]).is_err());
        assert!(op.rhs_build(&[c(0.0, 0.0); 16]).is_err());
    }

    #[test]
    fn jacobi_inverts_the_diagonal() {
        let (sp, sym) = setup(15, 2.0);
        let u = pseudo_random(15, 12);
        let op = StepOperator::from_state(&sp, sym, 0.2, &u).unwrap();
        let jac = op.jacobi();
        for k in 0..15 {
            let mut e = vec![c(0.0, 0.0); 15];
            e[k] = c(1.0, 0.0);
            let col = op.step_apply(&e).unwrap();
            let mut z = vec![c(0.0, 0.0); 15];
            jac.solve_into(&col[k..k + 1].repeat(15), &mut z);
            assert!((z[k] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
