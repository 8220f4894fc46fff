//! Preconditioned COCG, COCR and Bi-CGSTAB over matrix-free operators.
//!
//! Operators and preconditioners are plain closures `f(x, out)` writing
//! `A x` (resp. `M^{-1} x`) into `out`. COCG and COCR use the unconjugated
//! bilinear form `<x, y> = sum x_k y_k` and assume `A = A^T`; Bi-CGSTAB uses the
//! Hermitian inner product and works for any nonsingular `A`.
//!
//! All methods stop once `||r_n|| <= rel_tol * ||b||`, where `r_n` is the
//! recursively updated residual.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Denominators below this magnitude count as breakdown.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cocg,
    Cocr,
    BiCgStab,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cocg => "cocg",
            Method::Cocr => "cocr",
            Method::BiCgStab => "bicgstab",
        }
    }

    /// Operator applications per full iteration.
    pub fn matvecs_per_iteration(self) -> usize {
        match self {
            Method::Cocg | Method::Cocr => 1,
            Method::BiCgStab => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cocg" => Ok(Method::Cocg),
            "cocr" => Ok(Method::Cocr),
            "bicgstab" | "bi-cgstab" => Ok(Method::BiCgStab),
            other => Err(Error::Config(format!("unknown krylov method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub max_iters: usize,
    pub method: Method,
    pub preconditioned: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iters: 1000,
            method: Method::Cocg,
            preconditioned: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::Domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    /// Operator applications inside the iteration loop. The initial residual
    /// `b - A x0` is not counted.
    pub matvec_count: usize,
    /// Relative residuals `||r_n|| / ||b||`, starting with `n = 0`.
    pub residual_history: Vec<f64>,
    /// Bi-CGSTAB only: the last iteration stopped after its first half step
    /// because `||s||` already met the tolerance, so it used a single matvec.
    pub half_step_exit: bool,
}

impl SolverReport {
    fn new(method: Method) -> Self {
        Self {
            method,
            converged: false,
            iterations: 0,
            matvec_count: 0,
            residual_history: Vec::new(),
            half_step_exit: false,
        }
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<C64>,
    pub report: SolverReport,
}

fn zero(n: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); n]
}

fn bilinear(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += a * x`
fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

pub fn identity(x: &[C64], out: &mut [C64]) {
    out.copy_from_slice(x);
}

/// Shared setup: validates input and returns `(r0, ||b||)`, or an immediate
/// solution when `b = 0`.
fn start<A>(a: &mut A, b: &[C64], x0: &[C64], cfg: &SolverConfig, method: Method) -> Result<std::result::Result<(Vec<C64>, f64), Solution>>
where
    A: FnMut(&[C64], &mut [C64]),
{
    cfg.validate()?;
    Error::check_len(b.len(), x0.len())?;
    let b_norm = norm(b);
    if b_norm == 0.0 {
        let mut report = SolverReport::new(method);
        report.converged = true;
        report.residual_history.push(0.0);
        return Ok(Err(Solution { x: zero(b.len()), report }));
    }
    let mut r = zero(b.len());
    a(x0, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    Ok(Ok((r, b_norm)))
}

fn breakdown(reason: &'static str, report: SolverReport) -> Error {
    Error::Breakdown { reason, report }
}

/// Dispatches on `cfg.method`.
pub fn solve<A, M>(a: A, b: &[C64], x0: &[C64], m: M, cfg: &SolverConfig) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
{
    solve_observed(a, b, x0, m, cfg, |_, _| {})
}

/// Like [`solve`], calling `observe(n, x_n)` for every iterate including `x_0`.
pub fn solve_observed<A, M, O>(a: A, b: &[C64], x0: &[C64], m: M, cfg: &SolverConfig, observe: O) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
    O: FnMut(usize, &[C64]),
{
    match cfg.method {
        Method::Cocg => cocg_observed(a, b, x0, m, cfg, observe),
        Method::Cocr => cocr_observed(a, b, x0, m, cfg, observe),
        Method::BiCgStab => bicgstab_observed(a, b, x0, m, cfg, observe),
    }
}

pub fn cocg<A, M>(a: A, b: &[C64], x0: &[C64], m: M, cfg: &SolverConfig) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
{
    cocg_observed(a, b, x0, m, cfg, |_, _| {})
}

/// Preconditioned conjugate orthogonal conjugate gradient.
pub fn cocg_observed<A, M, O>(mut a: A, b: &[C64], x0: &[C64], mut m: M, cfg: &SolverConfig, mut observe: O) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
    O: FnMut(usize, &[C64]),
{
    let (mut r, b_norm) = match start(&mut a, b, x0, cfg, Method::Cocg)? {
        Ok(v) => v,
        Err(done) => return Ok(done),
    };
    let n = b.len();
    let tol = cfg.rel_tol * b_norm;
    let mut report = SolverReport::new(Method::Cocg);
    let mut x = x0.to_vec();
    let mut z = zero(n);
    let mut p = zero(n);
    let mut ap = zero(n);
    let mut rz_old = C64::new(0.0, 0.0);

    let mut r_norm = norm(&r);
    report.residual_history.push(r_norm / b_norm);
    observe(0, &x);

    while r_norm > tol {
        if report.iterations == cfg.max_iters {
            return Ok(Solution { x, report });
        }
        m(&r, &mut z);
        let rz = bilinear(&r, &z);
        if rz.norm() < BREAKDOWN_THRESHOLD {
            return Err(breakdown("<r, M^-1 r> vanished", report));
        }
        if report.iterations == 0 {
            p.copy_from_slice(&z);
        } else {
            let beta = rz / rz_old;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        a(&p, &mut ap);
        report.matvec_count += 1;
        let pap = bilinear(&p, &ap);
        if pap.norm() < BREAKDOWN_THRESHOLD {
            return Err(breakdown("<p, A p> vanished", report));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rz_old = rz;

        report.iterations += 1;
        r_norm = norm(&r);
        report.residual_history.push(r_norm / b_norm);
        observe(report.iterations, &x);
    }
    report.converged = true;
    Ok(Solution { x, report })
}

pub fn cocr<A, M>(a: A, b: &[C64], x0: &[C64], m: M, cfg: &SolverConfig) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
{
    cocr_observed(a, b, x0, m, cfg, |_, _| {})
}

/// Preconditioned conjugate orthogonal conjugate residual (Sogabe–Zhang).
///
/// Each iteration performs the single product `A z_n`; `A p_n` is then formed
/// by the short recurrence `A p_n = A z_n + beta A p_{n-1}`. The preconditioned
/// residual `z` is updated recursively through `q_n = M^{-1} A p_n`, the variant
/// that minimizes the residual in the `A`-conjugate bilinear norm.
pub fn cocr_observed<A, M, O>(mut a: A, b: &[C64], x0: &[C64], mut m: M, cfg: &SolverConfig, mut observe: O) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
    O: FnMut(usize, &[C64]),
{
    let (mut r, b_norm) = match start(&mut a, b, x0, cfg, Method::Cocr)? {
        Ok(v) => v,
        Err(done) => return Ok(done),
    };
    let n = b.len();
    let tol = cfg.rel_tol * b_norm;
    let mut report = SolverReport::new(Method::Cocr);
    let mut x = x0.to_vec();
    let mut z = zero(n);
    m(&r, &mut z);
    let mut az = zero(n);
    let mut p = zero(n);
    let mut ap = zero(n);
    let mut q = zero(n);
    let mut sigma_old = C64::new(0.0, 0.0);

    let mut r_norm = norm(&r);
    report.residual_history.push(r_norm / b_norm);
    observe(0, &x);

    while r_norm > tol {
        if report.iterations == cfg.max_iters {
            return Ok(Solution { x, report });
        }
        a(&z, &mut az);
        report.matvec_count += 1;
        let sigma = bilinear(&z, &az);
        if sigma.norm() < BREAKDOWN_THRESHOLD {
            return Err(breakdown("<z, A z> vanished", report));
        }
        if report.iterations == 0 {
            p.copy_from_slice(&z);
            ap.copy_from_slice(&az);
        } else {
            let beta = sigma / sigma_old;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
            ap.iter_mut().zip(&az).for_each(|(api, azi)| *api = azi + beta * *api);
        }
        m(&ap, &mut q);
        let denom = bilinear(&q, &ap);
        if denom.norm() < BREAKDOWN_THRESHOLD {
            return Err(breakdown("<M^-1 A p, A p> vanished", report));
        }
        let alpha = sigma / denom;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        axpy(-alpha, &q, &mut z);
        sigma_old = sigma;

        report.iterations += 1;
        r_norm = norm(&r);
        report.residual_history.push(r_norm / b_norm);
        observe(report.iterations, &x);
    }
    report.converged = true;
    Ok(Solution { x, report })
}

pub fn bicgstab<A, M>(a: A, b: &[C64], x0: &[C64], m: M, cfg: &SolverConfig) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
{
    bicgstab_observed(a, b, x0, m, cfg, |_, _| {})
}

/// Right-preconditioned Bi-CGSTAB with shadow residual fixed to `r_0`.
///
/// When `||s||` meets the tolerance after the first half step the iteration
/// ends there with `x += alpha p_hat`; otherwise the `omega` step would divide
/// by `(t, t) = 0` for exact solves such as `A = I`.
pub fn bicgstab_observed<A, M, O>(mut a: A, b: &[C64], x0: &[C64], mut m: M, cfg: &SolverConfig, mut observe: O) -> Result<Solution>
where
    A: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
    O: FnMut(usize, &[C64]),
{
    let (mut r, b_norm) = match start(&mut a, b, x0, cfg, Method::BiCgStab)? {
        Ok(v) => v,
        Err(done) => return Ok(done),
    };
    let n = b.len();
    let tol = cfg.rel_tol * b_norm;
    let mut report = SolverReport::new(Method::BiCgStab);
    let mut x = x0.to_vec();
    let shadow = r.clone();
    let mut p = zero(n);
    let mut p_hat = zero(n);
    let mut v = zero(n);
    let mut s = zero(n);
    let mut s_hat = zero(n);
    let mut t = zero(n);
    let mut rho_old = C64::new(0.0, 0.0);
    let mut alpha = C64::new(0.0, 0.0);
    let mut omega = C64::new(0.0, 0.0);

    let mut r_norm = norm(&r);
    report.residual_history.push(r_norm / b_norm);
    observe(0, &x);

    while r_norm > tol {
        if report.iterations == cfg.max_iters {
            return Ok(Solution { x, report });
        }
        let rho = inner(&shadow, &r);
        if rho.norm() < BREAKDOWN_THRESHOLD {
            return Err(breakdown("(r~, r) vanished", report));
        }
        if report.iterations == 0 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_old) * (alpha / omega);
            for ((pi, ri), vi) in p.iter_mut().zip(&r).zip(&v) {
                *pi = ri + beta * (*pi - omega * vi);
            }
        }
        m(&p, &mut p_hat);
        a(&p_hat, &mut v);
        report.matvec_count += 1;
        let rv = inner(&shadow, &v);
        if rv.norm() < BREAKDOWN_THRESHOLD {
            return Err(breakdown("(r~, v) vanished", report));
        }
        alpha = rho / rv;
        for ((si, ri), vi) in s.iter_mut().zip(&r).zip(&v) {
            *si = ri - alpha * vi;
        }
        rho_old = rho;

        let s_norm = norm(&s);
        if s_norm <= tol {
            axpy(alpha, &p_hat, &mut x);
            r.copy_from_slice(&s);
            report.iterations += 1;
            report.half_step_exit = true;
            r_norm = s_norm;
            report.residual_history.push(r_norm / b_norm);
            observe(report.iterations, &x);
            break;
        }

        m(&s, &mut s_hat);
        a(&s_hat, &mut t);
        report.matvec_count += 1;
        let tt = inner(&t, &t).re;
        if tt < BREAKDOWN_THRESHOLD {
            return Err(breakdown("(t, t) vanished", report));
        }
        omega = inner(&t, &s) / tt;
        if omega.norm() < BREAKDOWN_THRESHOLD {
            return Err(breakdown("omega vanished", report));
        }
        for ((xi, phi), shi) in x.iter_mut().zip(&p_hat).zip(&s_hat) {
            *xi += alpha * phi + omega * shi;
        }
        for ((ri, si), ti) in r.iter_mut().zip(&s).zip(&t) {
            *ri = si - omega * ti;
        }

        report.iterations += 1;
        r_norm = norm(&r);
        report.residual_history.push(r_norm / b_norm);
        observe(report.iterations, &x);
    }
    report.converged = true;
    Ok(Solution { x, report })
}

/// `||b - A x|| / ||b||`, recomputed from scratch.
pub fn true_relative_residual<A>(mut a: A, b: &[C64], x: &[C64]) -> f64
where
    A: FnMut(&[C64], &mut [C64]),
{
    let mut ax = zero(b.len());
    a(x, &mut ax);
    let res: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bn = norm(b);
    if bn == 0.0 {
        norm(&res)
    } else {
        norm(&res) / bn
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag(d: Vec<C64>) -> impl FnMut(&[C64], &mut [C64]) {
        move |x, y| {
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(&d) {
                *yi = di * xi;
            }
        }
    }

    fn cfg(method: Method) -> SolverConfig {
        SolverConfig {
            method,
            ..SolverConfig::default()
        }
    }

    const METHODS: [Method; 3] = [Method::Cocg, Method::Cocr, Method::BiCgStab];

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)];
        for method in METHODS {
            let sol = solve(identity, &b, &[c(0.0, 0.0); 3], identity, &cfg(method)).unwrap();
            assert!(sol.report.converged);
            assert_eq!(sol.report.iterations, 1, "{method}");
            assert_eq!(sol.x, b);
        }
        let sol = bicgstab(identity, &b, &[c(0.0, 0.0); 3], identity, &cfg(Method::BiCgStab)).unwrap();
        assert!(sol.report.half_step_exit);
        assert_eq!(sol.report.matvec_count, 1);
    }

    #[test]
    fn spd_diagonal_finite_termination() {
        let b = vec![c(1.0, 0.0); 3];
        let want = [0.5, 1.0 / 3.0, 0.25];
        for method in [Method::Cocg, Method::Cocr] {
            let a = diag(vec![c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
            let sol = solve(a, &b, &[c(0.0, 0.0); 3], identity, &cfg(method)).unwrap();
            assert!(sol.report.converged);
            assert!(sol.report.iterations <= 3, "{method}: {}", sol.report.iterations);
            for (x, w) in sol.x.iter().zip(want) {
                assert!((x - c(w, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_rhs_short_circuits() {
        for method in METHODS {
            let sol = solve(identity, &[c(0.0, 0.0); 4], &[c(1.0, 1.0); 4], identity, &cfg(method)).unwrap();
            assert!(sol.report.converged);
            assert_eq!(sol.report.iterations, 0);
            assert!(sol.x.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn exact_initial_guess_needs_no_iterations() {
        let b = vec![c(1.0, 2.0); 5];
        for method in METHODS {
            let sol = solve(identity, &b, &b, identity, &cfg(method)).unwrap();
            assert_eq!(sol.report.iterations, 0);
            assert_eq!(sol.report.matvec_count, 0);
        }
    }

    #[test]
    fn iteration_cap_yields_unconverged_report() {
        let d: Vec<C64> = (1..=40).map(|k| c(k as f64, 0.3 * k as f64)).collect();
        let b = vec![c(1.0, 0.0); 40];
        for method in METHODS {
            let cfg = SolverConfig {
                max_iters: 2,
                ..cfg(method)
            };
            let sol = solve(diag(d.clone()), &b, &[c(0.0, 0.0); 40], identity, &cfg).unwrap();
            assert!(!sol.report.converged);
            assert_eq!(sol.report.iterations, 2);
            assert_eq!(sol.report.residual_history.len(), 3);
        }
    }

    #[test]
    fn bad_config_and_dimensions_rejected() {
        let b = vec![c(1.0, 0.0); 3];
        let bad = SolverConfig {
            rel_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(cocg(identity, &b, &[c(0.0, 0.0); 3], identity, &bad).is_err());
        let bad = SolverConfig {
            max_iters: 0,
            ..SolverConfig::default()
        };
        assert!(cocg(identity, &b, &[c(0.0, 0.0); 3], identity, &bad).is_err());
        assert!(matches!(
            cocg(identity, &b, &[c(0.0, 0.0); 2], identity, &SolverConfig::default()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn cocg_breaks_down_on_isotropic_vector() {
        // A = I, r0 = (1, i): r^T r = 0
        let b = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let err = cocg(identity, &b, &[c(0.0, 0.0); 2], identity, &cfg(Method::Cocg)).unwrap_err();
        assert!(matches!(err, Error::Breakdown { .. }));
    }

    #[test]
    fn preconditioning_with_exact_inverse_is_one_step() {
        let d = vec![c(2.0, 1.0), c(3.0, -1.0), c(5.0, 0.5), c(1.0, 4.0)];
        let inv: Vec<C64> = d.iter().map(|z| z.inv()).collect();
        let b = vec![c(1.0, -1.0), c(0.5, 0.0), c(0.0, 2.0), c(1.0, 1.0)];
        for method in METHODS {
            let sol = solve(diag(d.clone()), &b, &[c(0.0, 0.0); 4], diag(inv.clone()), &cfg(method)).unwrap();
            assert_eq!(sol.report.iterations, 1, "{method}");
            for ((x, bi), di) in sol.x.iter().zip(&b).zip(&d) {
                assert!((x - bi / di).norm() < 1e-14);
            }
        }
    }
}
