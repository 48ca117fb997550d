//! Posterior Wald-type heterogeneity test between bands and posterior
//! ordering probabilities.
//!
//! Given paired draws `D_r = C_r(d_a) - C_r(d_b)`, the statistic is
//! `W = mean(D^2) / var(D)`; under the null `W - 1` is compared with the
//! 5% critical value of a chi-square with one degree of freedom.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// 95% quantile of chi-square(1), as used for the single-restriction test.
pub const CHI2_1_CRITICAL_5PCT: f64 = 3.84;

/// Number of nonoverlapping batches behind the numerical standard error.
pub const NSE_BATCHES: usize = 10;

/// Smallest draw count for which batch means are computed.
pub const NSE_MIN_DRAWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityTest {
    /// `W - q`.
    pub statistic: f64,
    /// Number of restrictions `q`.
    pub restrictions: usize,
    pub critical_value_5pct: f64,
    /// Batch-means numerical standard error; `None` when fewer than 20 draws.
    pub nse: Option<f64>,
    pub reject: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `(mean, population variance)` of the differences, or a degenerate-test error.
fn difference_moments(d: &[f64]) -> Result<(f64, f64)> {
    let m = mean(d);
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / d.len() as f64;
    let scale = d.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let floor = (8.0 * f64::EPSILON * scale).powi(2);
    if !(var > floor) {
        return Err(Error::DegenerateTest(format!(
            "posterior variance of the band difference is {var:e}"
        )));
    }
    Ok((m, var))
}

/// `W - 1 = mean(D)^2 / var(D)`, which is `>= 0` by construction.
fn excess_statistic(d: &[f64]) -> Result<f64> {
    let (m, var) = difference_moments(d)?;
    Ok(m * m / var)
}

fn paired_differences(a: &[f64], b: &[f64], min_len: usize) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "paired draws differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < min_len {
        return Err(Error::InsufficientDraws {
            needed: min_len,
            got: a.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// The ratio `W = (R^{-1} sum D_r^2) / (R^{-1} sum (D_r - D_bar)^2)`.
pub fn wald_ratio(draws_a: &[f64], draws_b: &[f64]) -> Result<f64> {
    let d = paired_differences(draws_a, draws_b, 2)?;
    Ok(1.0 + excess_statistic(&d)?)
}

/// Single-restriction heterogeneity test on paired draws.
pub fn wald_heterogeneity(draws_a: &[f64], draws_b: &[f64]) -> Result<HeterogeneityTest> {
    let d = paired_differences(draws_a, draws_b, 2)?;
    let statistic = excess_statistic(&d)?;
    let nse = if d.len() >= NSE_MIN_DRAWS {
        Some(numerical_standard_error(&batch_statistics(&d, NSE_BATCHES)?)?)
    } else {
        None
    };
    Ok(HeterogeneityTest {
        statistic,
        restrictions: 1,
        critical_value_5pct: CHI2_1_CRITICAL_5PCT,
        nse,
        reject: statistic > CHI2_1_CRITICAL_5PCT,
    })
}

/// Statistic `W - 1` on each of `n_batches` consecutive equal batches of the differences.
///
/// Trailing draws that do not fill a batch are ignored.
pub fn batch_statistics(differences: &[f64], n_batches: usize) -> Result<Vec<f64>> {
    if n_batches < 2 {
        return Err(Error::Config("need at least two batches".into()));
    }
    let needed = (2 * n_batches).max(NSE_MIN_DRAWS);
    if differences.len() < needed {
        return Err(Error::InsufficientDraws {
            needed,
            got: differences.len(),
        });
    }
    let size = differences.len() / n_batches;
    differences
        .chunks_exact(size)
        .take(n_batches)
        .map(excess_statistic)
        .collect()
}

/// Standard deviation of batch values divided by the square root of the batch count.
pub fn numerical_standard_error(batch_values: &[f64]) -> Result<f64> {
    let b = batch_values.len();
    if b < 2 {
        return Err(Error::InsufficientDraws { needed: 2, got: b });
    }
    let m = mean(batch_values);
    let var = batch_values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    Ok(var.sqrt() / (b as f64).sqrt())
}

/// Joint test over `k` band pairs: the per-pair excess statistics are summed
/// and compared with the chi-square(k) 95% quantile.
pub fn stacked_wald(pairs: &[(&[f64], &[f64])]) -> Result<HeterogeneityTest> {
    if pairs.is_empty() {
        return Err(Error::Config("no band pairs to test".into()));
    }
    let mut statistic = 0.0;
    for (a, b) in pairs {
        statistic += excess_statistic(&paired_differences(a, b, 2)?)?;
    }
    let k = pairs.len();
    let critical = if k == 1 {
        CHI2_1_CRITICAL_5PCT
    } else {
        ChiSquared::new(k as f64)
            .map_err(|e| Error::Domain(e.to_string()))?
            .inverse_cdf(0.95)
    };
    Ok(HeterogeneityTest {
        statistic,
        restrictions: k,
        critical_value_5pct: critical,
        nse: None,
        reject: statistic > critical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandProbability {
    /// Fraction of draws with `a_r > b_r`.
    pub prob: f64,
    /// Fraction of draws with `a_r == b_r`.
    pub ties: f64,
}

/// `#{r : a_r > b_r} / R`.
pub fn band_probability(draws_a: &[f64], draws_b: &[f64]) -> Result<BandProbability> {
    let d = paired_differences(draws_a, draws_b, 1)?;
    let r = d.len() as f64;
    let greater = d.iter().filter(|x| **x > 0.0).count() as f64;
    let ties = d.iter().filter(|x| **x == 0.0).count() as f64;
    Ok(BandProbability {
        prob: greater / r,
        ties: ties / r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_symmetric_case() {
        let t = wald_heterogeneity(&[-1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!(!t.reject);
        assert_eq!(wald_ratio(&[-1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn constant_difference_is_degenerate() {
        let a = vec![1.3; 50];
        let b = vec![0.2; 50];
        assert!(matches!(wald_heterogeneity(&a, &b), Err(Error::DegenerateTest(_))));
        let a = vec![0.1; 3];
        assert!(matches!(wald_heterogeneity(&a, &[0.0; 3]), Err(Error::DegenerateTest(_))));
    }

    #[test]
    fn swap_and_shift_invariance() {
        let a = [1.0, 2.5, 0.3, 1.7, 2.2];
        let b = [0.4, 0.1, 0.9, 0.2, 1.1];
        let w = wald_ratio(&a, &b).unwrap();
        assert!((wald_ratio(&b, &a).unwrap() - w).abs() < 1e-12);
        let a2: Vec<f64> = a.iter().map(|x| x + 7.0).collect();
        let b2: Vec<f64> = b.iter().map(|x| x + 7.0).collect();
        assert!((wald_ratio(&a2, &b2).unwrap() - w).abs() < 1e-12);
        assert!(w >= 1.0);
    }

    #[test]
    fn nse_examples() {
        assert_eq!(numerical_standard_error(&[2.0; 10]).unwrap(), 0.0);
        let (a, b) = (1.0, 4.0);
        let vals: Vec<f64> = (0..10).map(|i| if i < 5 { a } else { b }).collect();
        let expect = (a - b).abs() / (2.0 * 10f64.sqrt()) * (10.0f64 / 9.0).sqrt();
        assert!((numerical_standard_error(&vals).unwrap() - expect).abs() < 1e-14);
        assert!(matches!(
            batch_statistics(&[1.0; 19], 10),
            Err(Error::InsufficientDraws { .. })
        ));
    }

    #[test]
    fn probabilities_partition_unity() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.0, 2.0, 5.0, 1.0];
        let ab = band_probability(&a, &b).unwrap();
        let ba = band_probability(&b, &a).unwrap();
        assert_eq!(ab.prob + ba.prob + ab.ties, 1.0);
        assert_eq!(ab.prob, 0.5);
        assert_eq!(band_probability(&[2.0, 3.0], &[1.0, 1.0]).unwrap().prob, 1.0);
    }

    #[test]
    fn stacked_uses_chi2_k() {
        let a = [1.0, 2.5, 0.3, 1.7, 2.2];
        let b = [0.4, 0.1, 0.9, 0.2, 1.1];
        let t = stacked_wald(&[(&a, &b), (&b, &a)]).unwrap();
        assert!((t.critical_value_5pct - 5.991_464_547_107_979).abs() < 1e-6);
        assert_eq!(t.restrictions, 2);
    }
}
