use serde::{Deserialize, Serialize};

use crate::bands::{BandPartition, BandSpec};
use crate::error::{Error, Result};

/// Settings shared by estimation, the Monte Carlo harness and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// VAR lag order `p`.
    pub lags: usize,
    /// VMA truncation and Fourier grid size `H`.
    pub horizon: usize,
    /// Normal kernel bandwidth `W`.
    pub bandwidth: f64,
    /// Posterior draws `R` per focal time.
    pub draws: usize,
    /// Overall Minnesota tightness.
    pub shrinkage: f64,
    /// Prior mean on each variable's own first lag.
    pub first_lag_prior_mean: f64,
    pub bands: Vec<BandSpec>,
    pub seed: u64,
    /// 1-based focal times; `None` means every admissible time `p+1..=T`.
    pub time_grid: Option<Vec<usize>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lags: 2,
            horizon: 100,
            bandwidth: 8.0,
            draws: 500,
            shrinkage: 0.05,
            first_lag_prior_mean: 0.1,
            bands: crate::bands::parse_period_bands("transitory=1:5,persistent=5:inf")
                .expect("default bands are valid"),
            seed: 20_240_601,
            time_grid: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lags < 1 {
            return Err(Error::Config("lag order must be >= 1".into()));
        }
        if self.horizon < 2 {
            return Err(Error::Config("truncation H must be >= 2".into()));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::Config(format!("bandwidth must be > 0, got {}", self.bandwidth)));
        }
        if self.draws < 2 {
            return Err(Error::Config("need at least 2 posterior draws".into()));
        }
        if !(self.shrinkage > 0.0) {
            return Err(Error::Config(format!("shrinkage must be > 0, got {}", self.shrinkage)));
        }
        if !self.first_lag_prior_mean.is_finite() {
            return Err(Error::Config("first-lag prior mean must be finite".into()));
        }
        if let Some(grid) = &self.time_grid {
            if grid.is_empty() {
                return Err(Error::Config("time grid is empty".into()));
            }
        }
        self.partition().map(|_| ())
    }

    pub fn partition(&self) -> Result<BandPartition> {
        BandPartition::new(&self.bands, self.horizon)
    }

    /// Focal times for a panel of length `t`, validated against the lag order.
    pub fn focal_times(&self, t: usize) -> Result<Vec<usize>> {
        match &self.time_grid {
            None => {
                if t <= self.lags {
                    return Err(Error::InsufficientData(format!(
                        "T = {t} does not exceed the lag order {}",
                        self.lags
                    )));
                }
                Ok((self.lags + 1..=t).collect())
            }
            Some(grid) => {
                for &s in grid {
                    if s <= self.lags || s > t {
                        return Err(Error::Config(format!(
                            "focal time {s} outside the admissible range {}..={t}",
                            self.lags + 1
                        )));
                    }
                }
                Ok(grid.clone())
            }
        }
    }
}
