//! Independent oracles and fixtures shared by the integration tests.
//!
//! Nothing here calls into the library's spectral or posterior code paths:
//! each oracle recomputes its quantity from first principles.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Time-domain generalized FEVD truncated at `H` (h = 0..H-1), row-normalized.
pub fn time_domain_gfevd(phi: &[DMatrix<f64>], sigma: &DMatrix<f64>, horizon: usize) -> DMatrix<f64> {
    let mut theta = time_domain_gfevd_raw(phi, sigma, horizon);
    for j in 0..theta.nrows() {
        let s: f64 = theta.row(j).sum();
        theta.row_mut(j).scale_mut(1.0 / s);
    }
    theta
}

/// Unnormalized time-domain GFEVD:
/// `theta[j,k] = sigma_kk^{-1} sum_h (e_j' Psi_h Sigma e_k)^2 / sum_h e_j' Psi_h Sigma Psi_h' e_j`,
/// with impulse responses from pushing unit shocks through the VAR recursion.
pub fn time_domain_gfevd_raw(phi: &[DMatrix<f64>], sigma: &DMatrix<f64>, horizon: usize) -> DMatrix<f64> {
    let n = sigma.nrows();
    let mut psi: Vec<DMatrix<f64>> = Vec::new();
    for h in 0..horizon {
        let mut m = if h == 0 { DMatrix::identity(n, n) } else { DMatrix::zeros(n, n) };
        for (g, phi_g) in phi.iter().enumerate() {
            if h > g {
                m += phi_g * &psi[h - g - 1];
            }
        }
        psi.push(m);
    }
    let mut num = DMatrix::<f64>::zeros(n, n);
    let mut den = DVector::<f64>::zeros(n);
    for p in &psi {
        let ps = p * sigma;
        for j in 0..n {
            den[j] += (&ps * p.transpose())[(j, j)];
            for k in 0..n {
                num[(j, k)] += ps[(j, k)].powi(2) / sigma[(k, k)];
            }
        }
    }
    DMatrix::from_fn(n, n, |j, k| num[(j, k)] / den[j])
}

/// Random SPD covariance `L L' + 0.1 I`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let l = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    &l * l.transpose() + DMatrix::identity(n, n) * 0.1
}

fn companion(phi: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = phi[0].nrows();
    let p = phi.len();
    let mut c = DMatrix::zeros(n * p, n * p);
    for (l, m) in phi.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                c[(i, l * n + j)] = m[(i, j)];
            }
        }
    }
    for i in n..n * p {
        c[(i, i - n)] = 1.0;
    }
    c
}

pub fn radius(phi: &[DMatrix<f64>]) -> f64 {
    companion(phi)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Random stable lag matrices with spectral radius at most `target`.
pub fn random_stable_lags<R: Rng>(rng: &mut R, n: usize, p: usize, target: f64) -> Vec<DMatrix<f64>> {
    let mut phi: Vec<DMatrix<f64>> = (0..p)
        .map(|_| DMatrix::from_fn(n, n, |_, _| 0.4 * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let r = radius(&phi);
    if r > target {
        // Scaling lag l by c^l scales every companion eigenvalue by c.
        let c = target / r;
        for (l, m) in phi.iter_mut().enumerate() {
            *m *= c.powi(l as i32 + 1);
        }
    }
    phi
}

/// Simulates a VAR(p) with intercept and Gaussian errors, after a burn-in.
pub fn simulate_var<R: Rng>(
    rng: &mut R,
    intercept: &DVector<f64>,
    phi: &[DMatrix<f64>],
    sigma: &DMatrix<f64>,
    t_len: usize,
) -> DMatrix<f64> {
    let n = sigma.nrows();
    let l = sigma.clone().cholesky().expect("SPD covariance").l();
    let burn = 200;
    let mut hist: Vec<DVector<f64>> = vec![DVector::zeros(n); phi.len()];
    let mut out = DMatrix::zeros(t_len, n);
    for step in 0..burn + t_len {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x = intercept + &l * z;
        for (g, m) in phi.iter().enumerate() {
            x += m * &hist[g];
        }
        hist.rotate_right(1);
        hist[0] = x.clone();
        if step >= burn {
            out.set_row(step - burn, &x.transpose());
        }
    }
    out
}

/// Prints one acceptance line. Written straight to the stderr handle so the
/// line shows up even when the test harness captures output.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    use std::io::Write;
    let line = format!(
        "criterion {criterion}: {} — {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}
