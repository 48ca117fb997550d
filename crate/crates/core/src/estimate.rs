//! End-to-end estimation: panel -> per-time posteriors -> per-draw
//! band connectedness -> posterior summaries.

use rayon::prelude::*;

use crate::bands::BandPartition;
use crate::config::RunConfig;
use crate::connectedness::{
    partition_connectedness, reconstruct_time_domain, summarize_posterior, ConnectednessSet,
    SetSummary,
};
use crate::error::{Error, Result};
use crate::inference::{band_probability, wald_heterogeneity, BandProbability, HeterogeneityTest};
use crate::panel::TimeSeriesPanel;
use crate::qbll::{build_minnesota_prior, PosteriorDraw, PosteriorSampler, PriorSpec, VarDesign};
use crate::spectral::{partition_adjacency, VmaSpectrum};

/// Name of the aggregate over all bands of a partition.
pub const AGGREGATE_BAND: &str = "all";

/// Band measures of one draw: one set per partition band, then the aggregate.
pub fn draw_connectedness(
    draw: &PosteriorDraw,
    partition: &BandPartition,
    focal_time: usize,
    draw_index: usize,
) -> Result<Vec<ConnectednessSet>> {
    let spectrum = VmaSpectrum::from_draw(draw, partition.grid_size())?;
    let mut adj = partition_adjacency(&spectrum, &draw.sigma, partition)?;
    for a in &mut adj {
        a.focal_time = focal_time;
        a.draw = draw_index;
    }
    let mut sets = partition_connectedness(&adj)?;
    let all = reconstruct_time_domain(&sets, partition)?;
    sets.push(all);
    Ok(sets)
}

/// Posterior output at one focal time.
#[derive(Debug, Clone)]
pub struct FocalEstimate {
    pub focal_time: usize,
    /// Partition band names followed by [`AGGREGATE_BAND`].
    pub bands: Vec<String>,
    /// `totals[b][r]`: total connectedness of band `b` in stable draw `r`.
    pub totals: Vec<Vec<f64>>,
    pub summaries: Vec<SetSummary>,
    /// Draws still unstable after the redraw budget; excluded from everything above.
    pub unstable_draws: usize,
}

impl FocalEstimate {
    pub fn band_index(&self, name: &str) -> Option<usize> {
        self.bands.iter().position(|b| b == name)
    }

    /// Heterogeneity test and `Pr(C(a) > C(b))` for two bands.
    pub fn compare(&self, a: usize, b: usize) -> (Result<HeterogeneityTest>, Result<BandProbability>) {
        (
            wald_heterogeneity(&self.totals[a], &self.totals[b]),
            band_probability(&self.totals[a], &self.totals[b]),
        )
    }
}

/// Kernel-weighted TVP-VAR estimator bound to one panel.
#[derive(Debug, Clone)]
pub struct Estimator {
    config: RunConfig,
    partition: BandPartition,
    design: VarDesign,
    prior: PriorSpec,
    t_len: usize,
}

impl Estimator {
    pub fn new(panel: &TimeSeriesPanel, config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let partition = config.partition()?;
        let design = VarDesign::new(panel, config.lags)?;
        let prior = build_minnesota_prior(panel, config)?;
        Ok(Self {
            config: config.clone(),
            partition,
            design,
            prior,
            t_len: panel.len(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn partition(&self) -> &BandPartition {
        &self.partition
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn design(&self) -> &VarDesign {
        &self.design
    }

    pub fn sampler(&self, focal_time: usize) -> Result<PosteriorSampler> {
        let weights = self.design.weights(focal_time, self.config.bandwidth)?;
        let params = self.design.posterior(focal_time, &self.prior, &weights)?;
        PosteriorSampler::new(params)
    }

    /// Draws and summarizes the posterior at one 1-based focal time.
    pub fn focal(&self, focal_time: usize) -> Result<FocalEstimate> {
        let sampler = self.sampler(focal_time)?;
        let n_bands = self.partition.len() + 1;
        let mut per_band: Vec<Vec<ConnectednessSet>> = vec![Vec::with_capacity(self.config.draws); n_bands];
        let mut unstable = 0usize;
        for r in 0..self.config.draws {
            let draw = sampler.stable_draw(self.config.seed, r);
            if !draw.stable {
                unstable += 1;
                continue;
            }
            for (slot, set) in per_band
                .iter_mut()
                .zip(draw_connectedness(&draw, &self.partition, focal_time, r)?)
            {
                slot.push(set);
            }
        }
        if unstable > 0 {
            log::warn!(
                "t = {focal_time}: {unstable} of {} draws unstable after {} attempts, excluded",
                self.config.draws,
                crate::qbll::MAX_STABILITY_ATTEMPTS
            );
        }
        if per_band[0].len() < 2 {
            return Err(Error::Coverage(format!(
                "t = {focal_time}: only {} stable draws",
                per_band[0].len()
            )));
        }
        let summaries = per_band
            .iter()
            .map(|sets| summarize_posterior(sets))
            .collect::<Result<Vec<_>>>()?;
        let totals = per_band
            .iter()
            .map(|sets| sets.iter().map(|s| s.total).collect())
            .collect();
        let mut bands: Vec<String> = self.partition.bands().iter().map(|b| b.name.clone()).collect();
        bands.push(AGGREGATE_BAND.to_string());
        Ok(FocalEstimate {
            focal_time,
            bands,
            totals,
            summaries,
            unstable_draws: unstable,
        })
    }

    /// All focal times of the configured grid, in order, computed in parallel.
    pub fn run(&self) -> Result<Vec<FocalEstimate>> {
        let times = self.config.focal_times(self.t_len)?;
        times.par_iter().map(|&s| self.focal(s)).collect()
    }
}
