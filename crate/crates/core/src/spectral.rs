//! Truncated VMA coefficients, their discrete Fourier transform, and
//! band-specific generalized variance decompositions.
//!
//! For a draw with covariance `Sigma`, frequency responses `Psi_j = Psi(omega_j)`
//! on the grid `omega_j = 2 pi j / H`, and `G_j = Psi_j Sigma`, the
//! unnormalized adjacency over a band `d` is
//!
//! ```text
//! theta(d)[a,k] = sigma_kk^{-1} sum_{j in d} |G_j[a,k]|^2  /  sum_{all j} [G_j Psi_j^*]_{a,a}
//! ```
//!
//! and rows are then divided by the full-spectrum row sums. Summing the
//! numerator over the whole grid reproduces the `H`-truncated time-domain
//! GFEVD exactly (discrete Parseval).

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bands::{BandPartition, FrequencyBand};
use crate::error::{Error, Result};
use crate::qbll::PosteriorDraw;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Impulse responses `Psi(h)`, `h = 0..H-1`, from lag matrices via
/// `Psi(h) = sum_{g=1}^{min(h,p)} Phi_g Psi(h-g)`, `Psi(0) = I`.
pub fn vma_from_lags(phi: &[DMatrix<f64>], horizon: usize) -> Vec<DMatrix<f64>> {
    let n = phi.first().map_or(0, |m| m.nrows());
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(horizon);
    for h in 0..horizon {
        if h == 0 {
            psi.push(DMatrix::identity(n, n));
            continue;
        }
        let mut acc = DMatrix::zeros(n, n);
        for g in 1..=h.min(phi.len()) {
            acc.gemm(1.0, &phi[g - 1], &psi[h - g], 1.0);
        }
        psi.push(acc);
    }
    psi
}

/// VMA coefficients of a stable posterior draw; intercepts play no role.
pub fn vma_coefficients(draw: &PosteriorDraw, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    if !draw.stable {
        return Err(Error::Contract(
            "VMA coefficients requested for an unstable draw".into(),
        ));
    }
    if horizon < 1 {
        return Err(Error::Config("truncation H must be >= 1".into()));
    }
    Ok(vma_from_lags(&draw.phi, horizon))
}

/// `Psi(omega_j) = sum_h psi[h] e^{-i omega_j h}` for `j = 0..H-1`, via FFT.
pub fn frequency_response(psi: &[DMatrix<f64>]) -> Vec<DMatrix<Complex64>> {
    let h = psi.len();
    if h == 0 {
        return Vec::new();
    }
    let (nr, nc) = psi[0].shape();
    let fft = forward_fft(h);
    let mut out = vec![DMatrix::<Complex64>::zeros(nr, nc); h];
    let mut buf = vec![Complex64::new(0.0, 0.0); h];
    for a in 0..nr {
        for b in 0..nc {
            for (slot, m) in buf.iter_mut().zip(psi) {
                *slot = Complex64::new(m[(a, b)], 0.0);
            }
            fft.process(&mut buf);
            for (j, v) in buf.iter().enumerate() {
                out[j][(a, b)] = *v;
            }
        }
    }
    out
}

/// Same as [`frequency_response`] by direct summation, `O(H^2)`.
pub fn frequency_response_direct(psi: &[DMatrix<f64>]) -> Vec<DMatrix<Complex64>> {
    let h = psi.len();
    if h == 0 {
        return Vec::new();
    }
    let (nr, nc) = psi[0].shape();
    (0..h)
        .map(|j| {
            let mut acc = DMatrix::<Complex64>::zeros(nr, nc);
            for (lag, m) in psi.iter().enumerate() {
                // Reduce the phase index modulo H to keep the angle small.
                let angle = -2.0 * std::f64::consts::PI * ((j * lag) % h) as f64 / h as f64;
                let e = Complex64::from_polar(1.0, angle);
                acc.zip_apply(m, |z, x| *z += e * x);
            }
            acc
        })
        .collect()
}

/// Truncated VMA coefficients together with their frequency responses.
#[derive(Debug, Clone)]
pub struct VmaSpectrum {
    pub psi: Vec<DMatrix<f64>>,
    pub freq_response: Vec<DMatrix<Complex64>>,
}

impl VmaSpectrum {
    pub fn from_psi(psi: Vec<DMatrix<f64>>) -> Self {
        let freq_response = frequency_response(&psi);
        Self { psi, freq_response }
    }

    pub fn from_draw(draw: &PosteriorDraw, horizon: usize) -> Result<Self> {
        Ok(Self::from_psi(vma_coefficients(draw, horizon)?))
    }

    pub fn from_lags(phi: &[DMatrix<f64>], horizon: usize) -> Self {
        Self::from_psi(vma_from_lags(phi, horizon))
    }

    pub fn horizon(&self) -> usize {
        self.psi.len()
    }

    pub fn n_series(&self) -> usize {
        self.psi.first().map_or(0, |m| m.nrows())
    }
}

/// Row-normalized adjacency matrix for one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandAdjacency {
    pub theta: DMatrix<f64>,
    pub band: String,
    pub focal_time: usize,
    pub draw: usize,
}

/// Per-grid-point spectral pieces shared by all bands.
struct SpectralTerms {
    /// `|[Psi_j Sigma]_{a,k}|^2 / sigma_kk`, one matrix per grid index.
    weighted: Vec<DMatrix<f64>>,
    /// `sum_j [Psi_j Sigma Psi_j^*]_{a,a}`.
    denominators: Vec<f64>,
}

fn spectral_terms(spectrum: &VmaSpectrum, sigma: &DMatrix<f64>) -> Result<SpectralTerms> {
    let n = spectrum.n_series();
    if sigma.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "covariance is {:?}, spectrum has {n} series",
            sigma.shape()
        )));
    }
    for k in 0..n {
        if !(sigma[(k, k)] > 0.0) {
            return Err(Error::Degenerate(format!(
                "covariance diagonal entry {k} is {}",
                sigma[(k, k)]
            )));
        }
    }
    let sigma_c = sigma.map(|x| Complex64::new(x, 0.0));
    let mut denominators = vec![0.0; n];
    let mut weighted = Vec::with_capacity(spectrum.horizon());
    for psi_j in &spectrum.freq_response {
        let g = psi_j * &sigma_c;
        let mut w = DMatrix::zeros(n, n);
        for a in 0..n {
            for k in 0..n {
                let z = g[(a, k)];
                w[(a, k)] = z.norm_sqr() / sigma[(k, k)];
                denominators[a] += (z * psi_j[(a, k)].conj()).re;
            }
        }
        weighted.push(w);
    }
    Ok(SpectralTerms {
        weighted,
        denominators,
    })
}

fn band_sum(terms: &SpectralTerms, indices: &[usize]) -> Result<DMatrix<f64>> {
    let n = terms.denominators.len();
    let mut theta = DMatrix::zeros(n, n);
    for &j in indices {
        let w = terms.weighted.get(j).ok_or_else(|| {
            Error::Dimension(format!("band index {j} outside the grid of {}", terms.weighted.len()))
        })?;
        theta += w;
    }
    for a in 0..n {
        let d = terms.denominators[a];
        if !(d > 0.0) {
            return Err(Error::Degenerate(format!("forecast error variance of row {a} is {d}")));
        }
        theta.row_mut(a).scale_mut(1.0 / d);
    }
    Ok(theta)
}

/// Unnormalized band adjacency `theta(d)`.
pub fn unnormalized_band_adjacency(
    spectrum: &VmaSpectrum,
    sigma: &DMatrix<f64>,
    band: &FrequencyBand,
) -> Result<DMatrix<f64>> {
    band_sum(&spectral_terms(spectrum, sigma)?, &band.fourier_indices)
}

/// Unnormalized adjacency over the whole grid (the truncated GFEVD).
pub fn full_spectrum_adjacency(spectrum: &VmaSpectrum, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let all: Vec<usize> = (0..spectrum.horizon()).collect();
    band_sum(&spectral_terms(spectrum, sigma)?, &all)
}

fn normalize_rows(theta: &mut DMatrix<f64>, row_sums: &[f64]) -> Result<()> {
    for (a, &s) in row_sums.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::Degenerate(format!("adjacency row {a} sums to {s}")));
        }
        theta.row_mut(a).scale_mut(1.0 / s);
    }
    Ok(())
}

fn check_partition(spectrum: &VmaSpectrum, partition: &BandPartition) -> Result<()> {
    if partition.grid_size() != spectrum.horizon() {
        return Err(Error::Dimension(format!(
            "partition built for H = {}, spectrum has H = {}",
            partition.grid_size(),
            spectrum.horizon()
        )));
    }
    Ok(())
}

/// Row-normalized adjacency `theta~(d)` for one band of `partition`.
pub fn band_adjacency(
    spectrum: &VmaSpectrum,
    sigma: &DMatrix<f64>,
    band: &FrequencyBand,
    partition: &BandPartition,
) -> Result<BandAdjacency> {
    check_partition(spectrum, partition)?;
    let terms = spectral_terms(spectrum, sigma)?;
    let all: Vec<usize> = (0..spectrum.horizon()).collect();
    let full = band_sum(&terms, &all)?;
    let row_sums: Vec<f64> = full.row_iter().map(|r| r.sum()).collect();
    let mut theta = band_sum(&terms, &band.fourier_indices)?;
    normalize_rows(&mut theta, &row_sums)?;
    Ok(BandAdjacency {
        theta,
        band: band.name.clone(),
        focal_time: 0,
        draw: 0,
    })
}

/// Row-normalized adjacency for every band of `partition`, in partition order.
pub fn partition_adjacency(
    spectrum: &VmaSpectrum,
    sigma: &DMatrix<f64>,
    partition: &BandPartition,
) -> Result<Vec<BandAdjacency>> {
    check_partition(spectrum, partition)?;
    let terms = spectral_terms(spectrum, sigma)?;
    let mut per_band = partition
        .bands()
        .iter()
        .map(|b| band_sum(&terms, &b.fourier_indices))
        .collect::<Result<Vec<_>>>()?;
    let n = spectrum.n_series();
    let row_sums: Vec<f64> = (0..n)
        .map(|a| per_band.iter().map(|m| m.row(a).sum()).sum())
        .collect();
    for m in &mut per_band {
        normalize_rows(m, &row_sums)?;
    }
    Ok(per_band
        .into_iter()
        .zip(partition.bands())
        .map(|(theta, b)| BandAdjacency {
            theta,
            band: b.name.clone(),
            focal_time: 0,
            draw: 0,
        })
        .collect())
}
