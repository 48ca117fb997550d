//! Degree-based connectedness measures and their posterior summaries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bands::BandPartition;
use crate::error::{Error, Result};
use crate::spectral::BandAdjacency;

/// Connectedness measures of one band at one focal time for one draw.
///
/// All quantities are in percent of the full-spectrum adjacency mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectednessSet {
    pub total: f64,
    /// Received from others: off-diagonal row sums.
    pub from_degree: Vec<f64>,
    /// Transmitted to others: off-diagonal column sums.
    pub to_degree: Vec<f64>,
    /// `to - from`.
    pub net: Vec<f64>,
    /// `pairwise[j,k]` is what `j` sends to `k` minus what it receives from `k`,
    /// so row sums reproduce `net`.
    pub pairwise: DMatrix<f64>,
    pub band: String,
    pub focal_time: usize,
    pub draw: usize,
}

fn check_full_sum(full_sum: f64) -> Result<()> {
    if !(full_sum > 0.0) {
        return Err(Error::Degenerate(format!("full-spectrum adjacency sum is {full_sum}")));
    }
    Ok(())
}

fn off_diagonal_sum(theta: &DMatrix<f64>) -> f64 {
    theta.sum() - theta.trace()
}

/// `100 * sum_{j != k} theta~(d)[j,k] / full_sum`.
pub fn total_connectedness(adj: &BandAdjacency, full_sum: f64) -> Result<f64> {
    check_full_sum(full_sum)?;
    Ok(100.0 * off_diagonal_sum(&adj.theta) / full_sum)
}

/// From, to and net degrees, each scaled by `100 / full_sum`.
pub fn directional_connectedness(
    adj: &BandAdjacency,
    full_sum: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_full_sum(full_sum)?;
    let theta = &adj.theta;
    let n = theta.nrows();
    let scale = 100.0 / full_sum;
    let from: Vec<f64> = (0..n)
        .map(|j| scale * (theta.row(j).sum() - theta[(j, j)]))
        .collect();
    let to: Vec<f64> = (0..n)
        .map(|j| scale * (theta.column(j).sum() - theta[(j, j)]))
        .collect();
    let net = to.iter().zip(&from).map(|(t, f)| t - f).collect();
    Ok((from, to, net))
}

/// All measures for one band adjacency.
pub fn connectedness_set(adj: &BandAdjacency, full_sum: f64) -> Result<ConnectednessSet> {
    let total = total_connectedness(adj, full_sum)?;
    let (from_degree, to_degree, net) = directional_connectedness(adj, full_sum)?;
    let theta = &adj.theta;
    let scale = 100.0 / full_sum;
    let pairwise = DMatrix::from_fn(theta.nrows(), theta.ncols(), |j, k| {
        scale * (theta[(k, j)] - theta[(j, k)])
    });
    Ok(ConnectednessSet {
        total,
        from_degree,
        to_degree,
        net,
        pairwise,
        band: adj.band.clone(),
        focal_time: adj.focal_time,
        draw: adj.draw,
    })
}

/// Measures for every band of a partition; the normalizer is the full-spectrum mass.
pub fn partition_connectedness(per_band: &[BandAdjacency]) -> Result<Vec<ConnectednessSet>> {
    let full_sum: f64 = per_band.iter().map(|a| a.theta.sum()).sum();
    per_band.iter().map(|a| connectedness_set(a, full_sum)).collect()
}

/// Element-wise sum of per-band measures, i.e. the full-spectrum measures.
pub fn reconstruct_time_domain(
    per_band: &[ConnectednessSet],
    partition: &BandPartition,
) -> Result<ConnectednessSet> {
    let first = per_band
        .first()
        .ok_or_else(|| Error::Coverage("no bands to aggregate".into()))?;
    let mut names: Vec<&str> = per_band.iter().map(|c| c.band.as_str()).collect();
    names.sort_unstable();
    let mut expected: Vec<&str> = partition.bands().iter().map(|b| b.name.as_str()).collect();
    expected.sort_unstable();
    if names != expected {
        return Err(Error::Coverage(format!(
            "bands {names:?} do not match the partition {expected:?}"
        )));
    }
    if per_band
        .iter()
        .any(|c| c.focal_time != first.focal_time || c.draw != first.draw)
    {
        return Err(Error::Coverage("bands come from different focal times or draws".into()));
    }
    let n = first.from_degree.len();
    let mut out = ConnectednessSet {
        total: 0.0,
        from_degree: vec![0.0; n],
        to_degree: vec![0.0; n],
        net: vec![0.0; n],
        pairwise: DMatrix::zeros(n, n),
        band: "all".into(),
        focal_time: first.focal_time,
        draw: first.draw,
    };
    for c in per_band {
        out.total += c.total;
        for j in 0..n {
            out.from_degree[j] += c.from_degree[j];
            out.to_degree[j] += c.to_degree[j];
            out.net[j] += c.net[j];
        }
        out.pairwise += &c.pairwise;
    }
    Ok(out)
}

/// Empirical quantile with linear interpolation between order statistics
/// (position `(n-1) p` in the sorted sample).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Median and central 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
}

pub fn summarize_values(values: &[f64]) -> Result<PosteriorSummary> {
    if values.is_empty() {
        return Err(Error::Coverage("cannot summarize an empty group".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(PosteriorSummary {
        median: quantile_sorted(&sorted, 0.5),
        q025: quantile_sorted(&sorted, 0.025),
        q975: quantile_sorted(&sorted, 0.975),
    })
}

/// Summaries of every measure across draws for one `(focal time, band)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub band: String,
    pub focal_time: usize,
    pub draws: usize,
    pub total: PosteriorSummary,
    pub from_degree: Vec<PosteriorSummary>,
    pub to_degree: Vec<PosteriorSummary>,
    pub net: Vec<PosteriorSummary>,
}

/// Posterior median and 2.5/97.5 percentiles of each measure across draws.
///
/// All sets must share the same band and focal time.
pub fn summarize_posterior(draws: &[ConnectednessSet]) -> Result<SetSummary> {
    let first = draws
        .first()
        .ok_or_else(|| Error::Coverage("cannot summarize an empty group".into()))?;
    if draws
        .iter()
        .any(|d| d.band != first.band || d.focal_time != first.focal_time)
    {
        return Err(Error::Coverage("group mixes bands or focal times".into()));
    }
    let n = first.from_degree.len();
    let column = |f: &dyn Fn(&ConnectednessSet) -> f64| -> Result<PosteriorSummary> {
        summarize_values(&draws.iter().map(f).collect::<Vec<_>>())
    };
    Ok(SetSummary {
        band: first.band.clone(),
        focal_time: first.focal_time,
        draws: draws.len(),
        total: column(&|d| d.total)?,
        from_degree: (0..n).map(|j| column(&|d| d.from_degree[j])).collect::<Result<_>>()?,
        to_degree: (0..n).map(|j| column(&|d| d.to_degree[j])).collect::<Result<_>>()?,
        net: (0..n).map(|j| column(&|d| d.net[j])).collect::<Result<_>>()?,
    })
}
