//! Monte Carlo harness: simulate, estimate, compare with the truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::BandPartition;
use crate::config::RunConfig;
use crate::connectedness::{quantile_sorted, summarize_values, PosteriorSummary};
use crate::dgp::{simulate_dgp, true_connectedness, DgpConfig};
use crate::error::{Error, Result};
use crate::estimate::{Estimator, AGGREGATE_BAND};
use crate::rng::derive_seed;

/// Dates of the Appendix C probability table.
pub const PROBABILITY_DATES: [usize; 3] = [400, 650, 1000];

const SIM_SEED_KEY: u64 = 0x5170_0001;
const FIT_SEED_KEY: u64 = 0x5170_0002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_sims: usize,
    /// Process settings; `seed` is the study seed from which every simulation seed derives.
    pub dgp: DgpConfig,
    /// Estimator settings; bands are forced to low `(0, pi/5]` / high `(pi/5, pi]`.
    pub run: RunConfig,
    /// Dates reported in the probability table; added to the focal grid.
    pub probability_dates: Vec<usize>,
}

impl StudyConfig {
    pub fn new(n_sims: usize, dgp: DgpConfig, run: RunConfig) -> Self {
        Self {
            n_sims,
            dgp,
            run,
            probability_dates: PROBABILITY_DATES.to_vec(),
        }
    }

    /// Run settings actually used: paper bands and a grid that contains the probability dates.
    pub fn effective_run(&self) -> Result<RunConfig> {
        let mut run = self.run.clone();
        run.bands = BandPartition::low_high(run.horizon)?.specs();
        let mut grid = run
            .time_grid
            .clone()
            .unwrap_or_else(|| (run.lags + 1..=self.dgp.t_len).collect());
        grid.extend(self.probability_dates.iter().copied().filter(|&u| u <= self.dgp.t_len));
        grid.sort_unstable();
        grid.dedup();
        run.time_grid = Some(grid);
        run.validate()?;
        Ok(run)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sims < 1 {
            return Err(Error::Config("n_sims must be >= 1".into()));
        }
        self.dgp.validate()?;
        for &u in &self.probability_dates {
            if u <= self.run.lags || u > self.dgp.t_len {
                return Err(Error::Config(format!(
                    "probability date {u} outside {}..={}",
                    self.run.lags + 1,
                    self.dgp.t_len
                )));
            }
        }
        self.effective_run().map(|_| ())
    }
}

/// Everything kept from one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub index: usize,
    pub dgp_seed: u64,
    pub fit_seed: u64,
    pub regenerations: usize,
    pub masked_true_points: usize,
    /// `true_total[b][i]` at `times[i]`; `None` when the true parameters are unstable there.
    pub true_total: Vec<Vec<Option<f64>>>,
    /// Posterior summary of total connectedness per band and time.
    pub fitted_total: Vec<Vec<PosteriorSummary>>,
    /// `Pr(low > high)` per time.
    pub prob_low_gt_high: Vec<f64>,
    /// Heterogeneity statistic `W - 1` per time; `None` when degenerate.
    pub wald_statistic: Vec<Option<f64>>,
    pub wald_nse: Vec<Option<f64>>,
    pub unstable_draws: usize,
}

/// Cross-simulation view of one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSeries {
    pub band: String,
    /// Median over simulations of the true total connectedness.
    pub true_median: Vec<Option<f64>>,
    /// Median and 95% range over simulations of the posterior medians.
    pub fitted: Vec<PosteriorSummary>,
    /// Fraction of times where `true_median` lies inside the fitted 95% range.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub u: usize,
    /// Fraction of simulations whose true low-band connectedness exceeds the high band.
    pub true_probability: Option<f64>,
    /// Average over simulations of the posterior `Pr(low > high)`.
    pub fitted_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldSeries {
    /// Median over simulations of the statistic at each time.
    pub median_statistic: Vec<Option<f64>>,
    pub median_nse: Vec<Option<f64>>,
    /// Fraction of simulations rejecting at 5% at each time.
    pub reject_fraction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub effective_run: RunConfig,
    pub times: Vec<usize>,
    pub bands: Vec<String>,
    pub series: Vec<BandSeries>,
    pub probability_table: Vec<ProbabilityRow>,
    pub wald: WaldSeries,
    pub simulations: Vec<SimulationResult>,
}

impl StudyReport {
    pub fn band_index(&self, name: &str) -> Option<usize> {
        self.bands.iter().position(|b| b == name)
    }

    pub fn time_index(&self, t: usize) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }

    pub fn probability_at(&self, u: usize) -> Option<&ProbabilityRow> {
        self.probability_table.iter().find(|r| r.u == u)
    }
}

fn median_of(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(quantile_sorted(values, 0.5))
}

/// Simulates and fits one replication.
pub fn run_simulation(cfg: &StudyConfig, run: &RunConfig, index: usize) -> Result<SimulationResult> {
    let dgp_seed = derive_seed(cfg.dgp.seed, SIM_SEED_KEY ^ index as u64);
    let fit_seed = derive_seed(cfg.dgp.seed, FIT_SEED_KEY ^ index as u64);
    let dgp = DgpConfig {
        seed: dgp_seed,
        ..cfg.dgp.clone()
    };
    let path = simulate_dgp(&dgp)?;
    let partition = run.partition()?;
    let truth = true_connectedness(&path, &partition, run.horizon)?;
    let fit_run = RunConfig {
        seed: fit_seed,
        ..run.clone()
    };
    let estimator = Estimator::new(&path.panel, &fit_run)?;
    let fits = estimator.run()?;
    let times = fit_run.focal_times(path.panel.len())?;
    let n_bands = partition.len() + 1;
    let low = partition.index_of("low").expect("low band");
    let high = partition.index_of("high").expect("high band");

    let true_total = (0..n_bands)
        .map(|b| times.iter().map(|&t| truth.total(t, b)).collect())
        .collect();
    let fitted_total = (0..n_bands)
        .map(|b| fits.iter().map(|f| f.summaries[b].total).collect())
        .collect();
    let mut prob = Vec::with_capacity(fits.len());
    let mut stat = Vec::with_capacity(fits.len());
    let mut nse = Vec::with_capacity(fits.len());
    for f in &fits {
        let (test, p) = f.compare(low, high);
        prob.push(p?.prob);
        match test {
            Ok(t) => {
                stat.push(Some(t.statistic));
                nse.push(t.nse);
            }
            Err(Error::DegenerateTest(_)) => {
                stat.push(None);
                nse.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SimulationResult {
        index,
        dgp_seed,
        fit_seed,
        regenerations: path.regenerations,
        masked_true_points: truth.masked,
        true_total,
        fitted_total,
        prob_low_gt_high: prob,
        wald_statistic: stat,
        wald_nse: nse,
        unstable_draws: fits.iter().map(|f| f.unstable_draws).sum(),
    })
}

/// Runs `n_sims` independent replications in parallel and aggregates them.
pub fn run_mc_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let run = cfg.effective_run()?;
    let times = run.focal_times(cfg.dgp.t_len)?;
    let partition = run.partition()?;
    let mut bands: Vec<String> = partition.bands().iter().map(|b| b.name.clone()).collect();
    bands.push(AGGREGATE_BAND.to_string());

    let sims = (0..cfg.n_sims)
        .into_par_iter()
        .map(|i| {
            let r = run_simulation(cfg, &run, i);
            log::info!("DGP {}: simulation {} of {} done", cfg.dgp.dgp, i + 1, cfg.n_sims);
            r
        })
        .collect::<Result<Vec<_>>>()?;

    let series = bands
        .iter()
        .enumerate()
        .map(|(b, name)| {
            let mut inside = 0usize;
            let mut compared = 0usize;
            let mut true_median = Vec::with_capacity(times.len());
            let mut fitted = Vec::with_capacity(times.len());
            for i in 0..times.len() {
                let mut tv: Vec<f64> = sims.iter().filter_map(|s| s.true_total[b][i]).collect();
                let tm = median_of(&mut tv);
                let fv: Vec<f64> = sims.iter().map(|s| s.fitted_total[b][i].median).collect();
                let fs = summarize_values(&fv)?;
                if let Some(v) = tm {
                    compared += 1;
                    if v >= fs.q025 && v <= fs.q975 {
                        inside += 1;
                    }
                }
                true_median.push(tm);
                fitted.push(fs);
            }
            Ok(BandSeries {
                band: name.clone(),
                true_median,
                fitted,
                coverage: if compared == 0 { 0.0 } else { inside as f64 / compared as f64 },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let low = partition.index_of("low").expect("low band");
    let high = partition.index_of("high").expect("high band");
    let probability_table = cfg
        .probability_dates
        .iter()
        .map(|&u| {
            let i = times.iter().position(|&t| t == u).expect("dates are on the grid");
            let fitted = sims.iter().map(|s| s.prob_low_gt_high[i]).sum::<f64>() / sims.len() as f64;
            let pairs: Vec<bool> = sims
                .iter()
                .filter_map(|s| Some(s.true_total[low][i]? > s.true_total[high][i]?))
                .collect();
            let true_probability = (!pairs.is_empty())
                .then(|| pairs.iter().filter(|x| **x).count() as f64 / pairs.len() as f64);
            ProbabilityRow {
                u,
                true_probability,
                fitted_probability: fitted,
            }
        })
        .collect();

    let mut wald = WaldSeries {
        median_statistic: Vec::with_capacity(times.len()),
        median_nse: Vec::with_capacity(times.len()),
        reject_fraction: Vec::with_capacity(times.len()),
    };
    for i in 0..times.len() {
        let mut st: Vec<f64> = sims.iter().filter_map(|s| s.wald_statistic[i]).collect();
        let mut ns: Vec<f64> = sims.iter().filter_map(|s| s.wald_nse[i]).collect();
        let rejects = st.iter().filter(|x| **x > crate::inference::CHI2_1_CRITICAL_5PCT).count();
        wald.reject_fraction.push(rejects as f64 / sims.len() as f64);
        wald.median_statistic.push(median_of(&mut st));
        wald.median_nse.push(median_of(&mut ns));
    }

    Ok(StudyReport {
        config: cfg.clone(),
        effective_run: run,
        times,
        bands,
        series,
        probability_table,
        wald,
        simulations: sims,
    })
}
