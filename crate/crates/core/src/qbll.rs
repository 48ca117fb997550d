//! Quasi-Bayesian local likelihood (QBLL) posterior for a time-varying VAR.
//!
//! At each focal time `s` the VAR likelihood is reweighted by a Normal kernel
//! centred on `s`, and combined with a conjugate Normal-Wishart prior. The
//! resulting quasi-posterior is available in closed form:
//!
//! ```text
//! Xi~    = Xi0 + A' D A
//! Phi~   = Xi~^{-1} (A' D Y + Xi0 Phi0)
//! alpha~ = alpha0 + sum_t rho_t
//! Gamma~ = Gamma0 + Y' D Y + Phi0' Xi0 Phi0 - Phi~' Xi~ Phi~
//! ```
//!
//! where `A` stacks the regressors `(1, x_{t-1}', ..., x_{t-p}')`, `Y` stacks
//! `x_t'` and `D = diag(rho)`. The Wishart variate is the error *precision*;
//! its inverse is the covariance handed to the spectral code.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, lower_triangular_inverse, spd_cholesky, spd_inverse, symmetrize};
use crate::panel::TimeSeriesPanel;
use crate::rng::substream;

/// Redraw budget for a single posterior draw that lands outside the stable region.
pub const MAX_STABILITY_ATTEMPTS: usize = 50;

/// Companion eigenvalues must be at least this far inside the unit circle.
pub const STABILITY_MARGIN: f64 = 1e-8;

/// Intercept prior standard deviation relative to the square root of the shrinkage value.
const INTERCEPT_TIGHTNESS: f64 = 100.0;

/// Normal kernel `exp(-(d/W)^2 / 2) / sqrt(2 pi)` at distance `d`.
pub fn normal_kernel(distance: f64, bandwidth: f64) -> f64 {
    let z = distance / bandwidth;
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Normalized kernel weights around a focal observation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    /// `rho[t-1]` is the weight of observation `t`.
    pub rho: Vec<f64>,
    /// Effective sample size `(sum w)^2 / sum w^2`; equals `sum(rho)`.
    pub ess: f64,
    pub bandwidth: f64,
    /// 1-based focal index.
    pub focal: usize,
}

/// Weights `rho_t = ess * w_t / sum(w)` for observations `1..=t_len` around `focal`.
pub fn compute_kernel_weights(t_len: usize, focal: usize, bandwidth: f64) -> Result<KernelWeights> {
    if !(bandwidth > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    if focal < 1 || focal > t_len {
        return Err(Error::Domain(format!("focal index {focal} outside 1..={t_len}")));
    }
    let raw: Vec<f64> = (1..=t_len)
        .map(|t| normal_kernel(focal as f64 - t as f64, bandwidth))
        .collect();
    let sum: f64 = raw.iter().sum();
    let sum_sq: f64 = raw.iter().map(|w| w * w).sum();
    let ess = sum * sum / sum_sq;
    let rho = raw.iter().map(|w| ess * w / sum).collect();
    Ok(KernelWeights {
        rho,
        ess,
        bandwidth,
        focal,
    })
}

/// Regressor and response matrices of a VAR(p) with intercept.
///
/// Row `i` corresponds to observation `t = p + 1 + i`; regressor columns are
/// `[1, x_{t-1}, ..., x_{t-p}]`.
#[derive(Debug, Clone)]
pub struct VarDesign {
    pub regressors: DMatrix<f64>,
    pub responses: DMatrix<f64>,
    pub lags: usize,
}

impl VarDesign {
    pub fn new(panel: &TimeSeriesPanel, lags: usize) -> Result<Self> {
        let t = panel.len();
        let n = panel.n_series();
        if lags < 1 {
            return Err(Error::Config("lag order must be >= 1".into()));
        }
        if t <= lags {
            return Err(Error::InsufficientData(format!(
                "T = {t} does not exceed the lag order {lags}"
            )));
        }
        let x = panel.values();
        let rows = t - lags;
        let k = 1 + n * lags;
        let mut regressors = DMatrix::zeros(rows, k);
        for i in 0..rows {
            let tt = i + lags;
            regressors[(i, 0)] = 1.0;
            for l in 1..=lags {
                for j in 0..n {
                    regressors[(i, 1 + (l - 1) * n + j)] = x[(tt - l, j)];
                }
            }
        }
        let responses = x.rows(lags, rows).into_owned();
        Ok(Self {
            regressors,
            responses,
            lags,
        })
    }

    pub fn n_series(&self) -> usize {
        self.responses.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.responses.nrows()
    }

    /// Kernel weights over the regression rows for a 1-based focal time.
    pub fn weights(&self, focal_time: usize, bandwidth: f64) -> Result<KernelWeights> {
        if focal_time <= self.lags {
            return Err(Error::InsufficientData(format!(
                "focal time {focal_time} needs more than {} earlier observations",
                self.lags
            )));
        }
        compute_kernel_weights(self.n_rows(), focal_time - self.lags, bandwidth)
    }

    /// Weighted cross products `(A'DA, A'DY, Y'DY)`.
    pub fn weighted_moments(&self, rho: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let a = &self.regressors;
        let y = &self.responses;
        let mut da = a.clone();
        let mut dy = y.clone();
        for (i, &w) in rho.iter().enumerate() {
            da.row_mut(i).scale_mut(w);
            dy.row_mut(i).scale_mut(w);
        }
        let ata = symmetrize(&(a.transpose() * &da));
        let aty = a.transpose() * &dy;
        let yty = symmetrize(&(y.transpose() * &dy));
        (ata, aty, yty)
    }

    /// Quasi-posterior at a 1-based focal time.
    pub fn posterior(
        &self,
        focal_time: usize,
        prior: &PriorSpec,
        weights: &KernelWeights,
    ) -> Result<PosteriorParams> {
        if focal_time <= self.lags {
            return Err(Error::InsufficientData(format!(
                "focal time {focal_time} needs more than {} earlier observations",
                self.lags
            )));
        }
        if weights.rho.len() != self.n_rows() {
            return Err(Error::Dimension(format!(
                "weights cover {} observations, design has {}",
                weights.rho.len(),
                self.n_rows()
            )));
        }
        let (ata, aty, yty) = self.weighted_moments(&weights.rho);
        let xi = symmetrize(&(&prior.xi0 + ata));
        let chol = spd_cholesky(&xi, "posterior precision Xi")?;
        let phi = chol.solve(&(aty + &prior.xi0 * &prior.phi0));
        let alpha = prior.alpha0 + weights.rho.iter().sum::<f64>();
        let gamma = &prior.gamma0 + yty + prior.phi0.transpose() * &prior.xi0 * &prior.phi0
            - phi.transpose() * &xi * &phi;
        Ok(PosteriorParams {
            phi,
            xi,
            alpha,
            gamma: symmetrize(&gamma),
            focal_time,
            lags: self.lags,
        })
    }
}

/// Conjugate Normal-Wishart prior with Minnesota structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    /// Prior mean of the `K x N` coefficient matrix (column `j` is equation `j`).
    pub phi0: DMatrix<f64>,
    /// `K x K` prior precision scale.
    pub xi0: DMatrix<f64>,
    /// Wishart degrees of freedom.
    pub alpha0: f64,
    /// `N x N` Wishart scale.
    pub gamma0: DMatrix<f64>,
}

/// Residual variance of a univariate AR(p) with intercept, fitted by OLS.
fn ar_residual_variance(series: &[f64], lags: usize) -> Option<f64> {
    let t = series.len();
    if t <= lags + 1 {
        return None;
    }
    let rows = t - lags;
    let k = lags + 1;
    let a = DMatrix::from_fn(rows, k, |i, c| if c == 0 { 1.0 } else { series[i + lags - c] });
    let y = DVector::from_fn(rows, |i, _| series[i + lags]);
    let beta = (a.transpose() * &a).cholesky()?.solve(&(a.transpose() * &y));
    let resid = &y - &a * beta;
    let dof = if rows > k { rows - k } else { rows };
    Some(resid.norm_squared() / dof as f64)
}

fn sample_variance(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Minnesota Normal-Wishart prior.
///
/// Coefficient on lag `l` of variable `k` has prior variance
/// `shrinkage / (l^2 sigma_k^2)` (times the equation variance carried by the
/// covariance), i.e. `Xi0` holds `l^2 sigma_k^2 / shrinkage`; the intercept
/// prior variance is `100^2 * shrinkage`, effectively loose. The Wishart part uses
/// `alpha0 = N + 2` and `Gamma0 = diag(sigma_1^2, ..., sigma_N^2)`, so the
/// prior mean of the covariance equals the univariate AR(p) residual variances.
pub fn build_minnesota_prior(panel: &TimeSeriesPanel, config: &RunConfig) -> Result<PriorSpec> {
    let p = config.lags;
    let t = panel.len();
    let n = panel.n_series();
    if t <= p {
        return Err(Error::InsufficientData(format!(
            "T = {t} does not exceed the lag order {p}"
        )));
    }
    if !(config.shrinkage > 0.0) {
        return Err(Error::Domain(format!("shrinkage must be > 0, got {}", config.shrinkage)));
    }
    let mut scales = Vec::with_capacity(n);
    for j in 0..n {
        let col: Vec<f64> = panel.values().column(j).iter().copied().collect();
        let var = ar_residual_variance(&col, p)
            .filter(|v| v.is_finite() && *v > 0.0)
            .unwrap_or_else(|| sample_variance(&col));
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::Degenerate(format!(
                "series {:?} has zero variance",
                panel.series_names()[j]
            )));
        }
        scales.push(var);
    }

    let k = 1 + n * p;
    let mut phi0 = DMatrix::zeros(k, n);
    for j in 0..n {
        phi0[(1 + j, j)] = config.first_lag_prior_mean;
    }
    let mut xi0 = DMatrix::zeros(k, k);
    let phi = config.shrinkage;
    xi0[(0, 0)] = 1.0 / (INTERCEPT_TIGHTNESS * INTERCEPT_TIGHTNESS * phi);
    for l in 1..=p {
        for (j, var) in scales.iter().enumerate() {
            let idx = 1 + (l - 1) * n + j;
            xi0[(idx, idx)] = (l * l) as f64 * var / phi;
        }
    }
    Ok(PriorSpec {
        phi0,
        xi0,
        alpha0: n as f64 + 2.0,
        gamma0: DMatrix::from_diagonal(&DVector::from_vec(scales)),
    })
}

/// Time-`s` quasi-posterior parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorParams {
    /// `K x N` posterior mean of the coefficients.
    pub phi: DMatrix<f64>,
    /// `K x K` posterior precision scale.
    pub xi: DMatrix<f64>,
    pub alpha: f64,
    /// `N x N` posterior Wishart scale (inverse-Wishart scale of the covariance).
    pub gamma: DMatrix<f64>,
    pub focal_time: usize,
    pub lags: usize,
}

impl PosteriorParams {
    pub fn n_series(&self) -> usize {
        self.gamma.nrows()
    }

    /// Mean of the covariance under the inverse-Wishart posterior.
    pub fn covariance_mean(&self) -> Option<DMatrix<f64>> {
        let n = self.n_series() as f64;
        (self.alpha > n + 1.0).then(|| &self.gamma / (self.alpha - n - 1.0))
    }

    /// Splits a `K x N` coefficient matrix into intercept and lag matrices.
    pub fn split_coefficients(&self, coef: &DMatrix<f64>) -> (DVector<f64>, Vec<DMatrix<f64>>) {
        split_coefficients(coef, self.n_series(), self.lags)
    }
}

fn split_coefficients(coef: &DMatrix<f64>, n: usize, lags: usize) -> (DVector<f64>, Vec<DMatrix<f64>>) {
    let intercept = coef.row(0).transpose();
    let phi = (1..=lags)
        .map(|l| coef.rows(1 + (l - 1) * n, n).transpose())
        .collect();
    (intercept, phi)
}

/// Quasi-posterior at focal time `s` computed straight from a panel.
pub fn compute_posterior(
    panel: &TimeSeriesPanel,
    focal_time: usize,
    prior: &PriorSpec,
    weights: &KernelWeights,
    lags: usize,
) -> Result<PosteriorParams> {
    VarDesign::new(panel, lags)?.posterior(focal_time, prior, weights)
}

/// One draw of `(Phi_1..Phi_p, Sigma)` plus intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub intercept: DVector<f64>,
    /// Lag matrices `Phi_1, ..., Phi_p`, each `N x N`.
    pub phi: Vec<DMatrix<f64>>,
    /// Error covariance.
    pub sigma: DMatrix<f64>,
    pub stable: bool,
}

impl PosteriorDraw {
    /// Draw from known parameters, with stability evaluated.
    pub fn new(intercept: DVector<f64>, phi: Vec<DMatrix<f64>>, sigma: DMatrix<f64>) -> Self {
        let stable = is_stable(&phi);
        Self {
            intercept,
            phi,
            sigma,
            stable,
        }
    }

    pub fn n_series(&self) -> usize {
        self.sigma.nrows()
    }
}

/// `Np x Np` companion matrix of lag matrices `Phi_1..Phi_p`.
pub fn companion_matrix(phi: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = phi.len();
    let n = phi.first().map_or(0, |m| m.nrows());
    let mut c = DMatrix::zeros(n * p, n * p);
    for (l, m) in phi.iter().enumerate() {
        c.view_mut((0, l * n), (n, n)).copy_from(m);
    }
    for i in 0..n * (p.saturating_sub(1)) {
        c[(n + i, i)] = 1.0;
    }
    c
}

/// Largest eigenvalue modulus of the companion matrix.
pub fn spectral_radius(phi: &[DMatrix<f64>]) -> f64 {
    let c = companion_matrix(phi);
    if c.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    c.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn is_stable(phi: &[DMatrix<f64>]) -> bool {
    spectral_radius(phi) < 1.0 - STABILITY_MARGIN
}

/// True iff every companion eigenvalue has modulus below `1 - 1e-8`.
pub fn check_stability(draw: &PosteriorDraw) -> bool {
    is_stable(&draw.phi)
}

/// Factorizations reused across all draws at one focal time.
#[derive(Debug, Clone)]
pub struct PosteriorSampler {
    params: PosteriorParams,
    /// Lower Cholesky factor of `Gamma~`.
    gamma_chol: DMatrix<f64>,
    /// `L_Xi^{-T}` where `Xi~ = L_Xi L_Xi'`; satisfies `U U' = Xi~^{-1}`.
    xi_inv_factor: DMatrix<f64>,
    chi2: Vec<ChiSquared<f64>>,
}

impl PosteriorSampler {
    pub fn new(params: PosteriorParams) -> Result<Self> {
        let n = params.n_series();
        if !(params.alpha > n as f64 - 1.0) {
            return Err(Error::Domain(format!(
                "Wishart degrees of freedom {} must exceed N - 1 = {}",
                params.alpha,
                n - 1
            )));
        }
        let gamma_chol = spd_cholesky(&params.gamma, "posterior Wishart scale Gamma")?.l();
        let xi_l = spd_cholesky(&params.xi, "posterior precision Xi")?.l();
        let xi_inv_factor = lower_triangular_inverse(&xi_l).transpose();
        let chi2 = (0..n)
            .map(|i| {
                ChiSquared::new(params.alpha - i as f64)
                    .map_err(|e| Error::Domain(format!("chi-square: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            gamma_chol,
            xi_inv_factor,
            chi2,
        })
    }

    pub fn params(&self) -> &PosteriorParams {
        &self.params
    }

    /// One unconstrained draw (no stability screening).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PosteriorDraw {
        let n = self.params.n_series();
        let k = self.params.phi.nrows();
        // Bartlett factor of the precision: P = L^{-T} B B' L^{-1}, so the
        // covariance P^{-1} = (L B^{-T}) (L B^{-T})'.
        let mut bartlett = DMatrix::zeros(n, n);
        for i in 0..n {
            bartlett[(i, i)] = self.chi2[i].sample(rng).sqrt();
            for j in 0..i {
                bartlett[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let cov_factor = &self.gamma_chol * lower_triangular_inverse(&bartlett).transpose();
        let sigma = symmetrize(&(&cov_factor * cov_factor.transpose()));
        let z = DMatrix::from_fn(k, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let coef = &self.params.phi + &self.xi_inv_factor * z * cov_factor.transpose();
        let (intercept, phi) = self.params.split_coefficients(&coef);
        PosteriorDraw::new(intercept, phi, sigma)
    }

    /// Draw `r` of stream `(seed, focal_time)`, redrawn while unstable up to the attempt budget.
    pub fn stable_draw(&self, seed: u64, draw_index: usize) -> PosteriorDraw {
        let mut rng = substream(seed, self.params.focal_time as u64, draw_index as u64);
        let mut draw = self.draw(&mut rng);
        for _ in 1..MAX_STABILITY_ATTEMPTS {
            if draw.stable {
                break;
            }
            draw = self.draw(&mut rng);
        }
        draw
    }
}

/// `R` posterior draws; reproducible for a given seed.
///
/// Draws that stay unstable after the redraw budget are returned with
/// `stable == false`.
pub fn sample_posterior(params: &PosteriorParams, draws: usize, seed: u64) -> Result<Vec<PosteriorDraw>> {
    if draws < 1 {
        return Err(Error::Config("need at least one posterior draw".into()));
    }
    let sampler = PosteriorSampler::new(params.clone())?;
    Ok((0..draws).map(|r| sampler.stable_draw(seed, r)).collect())
}

/// Asymmetry of `Gamma~` and `Xi~`, for diagnostics.
pub fn posterior_asymmetry(params: &PosteriorParams) -> f64 {
    asymmetry(&params.gamma).max(asymmetry(&params.xi))
}

/// Posterior mean of the covariance; falls back to the inverse of the scale when undefined.
pub fn posterior_covariance_point(params: &PosteriorParams) -> Result<DMatrix<f64>> {
    match params.covariance_mean() {
        Some(m) => Ok(m),
        None => spd_inverse(&params.gamma, "posterior Wishart scale Gamma"),
    }
}
