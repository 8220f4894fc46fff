//! Dense reference matrices built straight from the DFT sums.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `|2 pi k_p / L|^s` with `k_p = p` below the Nyquist index and `p - N` above it.
pub fn symbol(length: f64, n: usize, s: f64) -> Vec<f64> {
    (0..n)
        .map(|p| {
            let k = if p <= (n - 1) / 2 { p as f64 } else { p as f64 - n as f64 };
            (2.0 * PI * k / length).abs().powf(s)
        })
        .collect()
}

/// Unitary DFT matrix `F_jk = exp(-2 pi i jk / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> DMatrix<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        let phase = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
        C64::from_polar(scale, phase)
    })
}

/// Dense fractional Laplacian `F^H diag(d) F`.
pub fn laplacian(length: f64, n: usize, alpha: f64) -> DMatrix<C64> {
    let d = symbol(length, n, alpha);
    DMatrix::from_fn(n, n, |j, k| {
        let m = (j + n - k) % n;
        let sum: f64 = (0..n).map(|p| d[p] * (2.0 * PI * (p * m) as f64 / n as f64).cos()).sum();
        C64::new(sum / n as f64, 0.0)
    })
}

/// `I + i tau (Lambda - diag(density))`.
pub fn step_matrix(lap: &DMatrix<C64>, tau: f64, density: &[f64]) -> DMatrix<C64> {
    let n = density.len();
    let mut a = lap * C64::new(0.0, tau);
    for j in 0..n {
        a[(j, j)] += C64::new(1.0, -tau * density[j]);
    }
    a
}

pub fn to_vec(v: &nalgebra::DVector<C64>) -> Vec<C64> {
    v.iter().copied().collect()
}

pub fn rel_err(x: &[C64], y: &[C64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = y.iter().map(|b| b.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut StdRng, n: usize, scale: f64) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
        .collect()
}

/// Smooth periodic data with a few random Fourier modes.
pub fn smooth_vec(rng: &mut StdRng, n: usize, amplitude: f64) -> Vec<C64> {
    let modes: Vec<(i32, C64)> = (-3..=3)
        .map(|k| (k, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    (0..n)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / n as f64;
            amplitude * modes.iter().map(|&(k, c)| c * C64::from_polar(1.0, k as f64 * x)).sum::<C64>() / 7.0
        })
        .collect()
}
