//! Frequency bands on the discrete Fourier grid `omega_j = 2*pi*j/H`.
//!
//! A band is a half-open interval `(omega_low, omega_high]` inside `[0, pi]`.
//! Grid index `j` is assigned by its folded frequency `min(omega_j, 2*pi - omega_j)`,
//! so conjugate frequencies always land in the same band. The zero frequency
//! belongs to the band that starts at 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EDGE_TOL: f64 = 1e-12;

/// A named angular-frequency interval, independent of any grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: String,
    pub omega_low: f64,
    pub omega_high: f64,
}

impl BandSpec {
    pub fn new(name: impl Into<String>, omega_low: f64, omega_high: f64) -> Result<Self> {
        let name = name.into();
        if !(0.0..PI + EDGE_TOL).contains(&omega_low)
            || omega_high > PI + EDGE_TOL
            || omega_low >= omega_high
        {
            return Err(Error::Config(format!(
                "band {name:?}: need 0 <= low < high <= pi, got ({omega_low}, {omega_high}]"
            )));
        }
        Ok(Self {
            name,
            omega_low,
            omega_high: omega_high.min(PI),
        })
    }

    /// Band covering periods `[period_low, period_high]` (in observations),
    /// i.e. angular frequencies `(2pi/period_high, 2pi/period_low]` clipped to `(0, pi]`.
    pub fn from_periods(name: impl Into<String>, period_low: f64, period_high: f64) -> Result<Self> {
        let name = name.into();
        if !(period_low > 0.0 && period_high > period_low) {
            return Err(Error::Config(format!(
                "band {name:?}: need 0 < period_low < period_high, got {period_low}:{period_high}"
            )));
        }
        let low = if period_high.is_infinite() {
            0.0
        } else {
            2.0 * PI / period_high
        };
        let high = (2.0 * PI / period_low).min(PI);
        if low >= PI - EDGE_TOL {
            return Err(Error::Config(format!(
                "band {name:?}: periods {period_low}:{period_high} lie entirely above the Nyquist frequency"
            )));
        }
        Self::new(name, low, high)
    }

    fn contains(&self, folded: f64) -> bool {
        (folded > self.omega_low + EDGE_TOL || (self.omega_low == 0.0 && folded <= EDGE_TOL))
            && folded <= self.omega_high + EDGE_TOL
    }
}

/// A band resolved against a grid of size `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub name: String,
    pub omega_low: f64,
    pub omega_high: f64,
    /// Sorted grid indices `j` in `0..H` that fall in the band.
    pub fourier_indices: Vec<usize>,
}

impl FrequencyBand {
    /// Merges two bands into one covering both index sets.
    pub fn union(&self, other: &FrequencyBand) -> FrequencyBand {
        let mut idx: Vec<usize> = self
            .fourier_indices
            .iter()
            .chain(&other.fourier_indices)
            .copied()
            .collect();
        idx.sort_unstable();
        idx.dedup();
        FrequencyBand {
            name: format!("{}+{}", self.name, other.name),
            omega_low: self.omega_low.min(other.omega_low),
            omega_high: self.omega_high.max(other.omega_high),
            fourier_indices: idx,
        }
    }
}

/// Folded angular frequency of grid index `j` on an `h`-point grid.
pub fn folded_frequency(j: usize, h: usize) -> f64 {
    let m = j.min(h - j);
    2.0 * PI * m as f64 / h as f64
}

/// Disjoint bands that jointly cover every grid index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPartition {
    grid_size: usize,
    bands: Vec<FrequencyBand>,
}

impl BandPartition {
    pub fn new(specs: &[BandSpec], grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::Config(format!("grid size H must be >= 2, got {grid_size}")));
        }
        if specs.is_empty() {
            return Err(Error::Config("band partition is empty".into()));
        }
        let mut names = std::collections::HashSet::new();
        for s in specs {
            if !names.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate band name {:?}", s.name)));
            }
        }
        let mut sorted: Vec<&BandSpec> = specs.iter().collect();
        sorted.sort_by(|a, b| a.omega_low.total_cmp(&b.omega_low));
        if sorted[0].omega_low != 0.0 {
            return Err(Error::Config(format!(
                "bands must start at frequency 0, lowest starts at {}",
                sorted[0].omega_low
            )));
        }
        for w in sorted.windows(2) {
            if (w[0].omega_high - w[1].omega_low).abs() > EDGE_TOL {
                return Err(Error::Config(format!(
                    "bands {:?} and {:?} leave a gap or overlap ({} vs {})",
                    w[0].name, w[1].name, w[0].omega_high, w[1].omega_low
                )));
            }
        }
        let top = sorted.last().map(|b| b.omega_high).unwrap_or(0.0);
        if (top - PI).abs() > EDGE_TOL {
            return Err(Error::Config(format!("bands must reach pi, highest ends at {top}")));
        }

        let mut bands: Vec<FrequencyBand> = specs
            .iter()
            .map(|s| FrequencyBand {
                name: s.name.clone(),
                omega_low: s.omega_low,
                omega_high: s.omega_high,
                fourier_indices: Vec::new(),
            })
            .collect();
        for j in 0..grid_size {
            let f = folded_frequency(j, grid_size);
            let owner = specs.iter().position(|s| s.contains(f)).ok_or_else(|| {
                Error::Config(format!("grid index {j} (frequency {f}) not covered by any band"))
            })?;
            bands[owner].fourier_indices.push(j);
        }
        Ok(Self { grid_size, bands })
    }

    /// Single band spanning the whole spectrum.
    pub fn full(grid_size: usize) -> Result<Self> {
        Self::new(&[BandSpec::new("total", 0.0, PI)?], grid_size)
    }

    /// Low band `(0, pi/5]` and high band `(pi/5, pi]`.
    pub fn low_high(grid_size: usize) -> Result<Self> {
        Self::new(
            &[
                BandSpec::new("low", 0.0, PI / 5.0)?,
                BandSpec::new("high", PI / 5.0, PI)?,
            ],
            grid_size,
        )
    }

    /// Transitory (periods 1 to 5) and persistent (periods above 5) bands for daily data.
    pub fn daily(grid_size: usize) -> Result<Self> {
        Self::new(&parse_period_bands("transitory=1:5,persistent=5:inf")?, grid_size)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn bands(&self) -> &[FrequencyBand] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.bands.iter().position(|b| b.name == name)
    }

    pub fn specs(&self) -> Vec<BandSpec> {
        self.bands
            .iter()
            .map(|b| BandSpec {
                name: b.name.clone(),
                omega_low: b.omega_low,
                omega_high: b.omega_high,
            })
            .collect()
    }
}

/// Parses period syntax such as `1:5,5:inf` or `short=1:5,long=5:inf`.
///
/// Unnamed bands are labelled by their period range.
pub fn parse_period_bands(text: &str) -> Result<Vec<BandSpec>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, range) = match item.split_once('=') {
            Some((n, r)) => (n.trim().to_string(), r.trim()),
            None => (item.to_string(), item),
        };
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("band {item:?}: expected low:high")))?;
        let parse = |s: &str| -> Result<f64> {
            let s = s.trim();
            if s.eq_ignore_ascii_case("inf") {
                Ok(f64::INFINITY)
            } else {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("band {item:?}: bad period {s:?}")))
            }
        };
        out.push(BandSpec::from_periods(name, parse(lo)?, parse(hi)?)?);
    }
    if out.is_empty() {
        return Err(Error::Config("no bands given".into()));
    }
    Ok(out)
}
