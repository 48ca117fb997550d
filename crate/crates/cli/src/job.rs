//! Command-line flags, the TOML job file, and their merge into a validated job.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use dynnet::{parse_period_bands, BandSpec, DgpConfig, DgpId, Error, Result, RunConfig, StudyConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Estimate connectedness on a panel and write measures, tests and probabilities.
    Estimate,
    /// Run a Monte Carlo study on one of the simulated processes.
    McStudy,
    /// Estimate on a panel and write only the band heterogeneity tests.
    Test,
}

/// Dynamic frequency-band network connectedness from a kernel-weighted TVP-VAR.
///
/// Settings come from an optional TOML job file (--config); flags override it.
#[derive(Debug, Parser, Default)]
#[command(name = "dynnet", version, about, long_about = None)]
pub struct Cli {
    /// What to run.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// TOML job file; any flag given on the command line wins over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Panel CSV: header row of series names, time labels in the first column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// VAR lag order p.
    #[arg(long)]
    pub lags: Option<usize>,
    /// VMA truncation and Fourier grid size H.
    #[arg(long = "H")]
    pub horizon: Option<usize>,
    /// Normal kernel bandwidth W.
    #[arg(long = "W")]
    pub bandwidth: Option<f64>,
    /// Posterior draws per focal time.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Minnesota overall tightness phi.
    #[arg(long)]
    pub shrinkage: Option<f64>,
    /// Bands by period range, e.g. "1:5,5:inf" or "short=1:5,long=5:inf".
    #[arg(long, conflicts_with = "omega_bands")]
    pub bands: Option<String>,
    /// Bands by angular frequency, e.g. "low=0:pi/5,high=pi/5:pi".
    #[arg(long)]
    pub omega_bands: Option<String>,
    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: number of processors).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Simulated process for mc-study: I, II, III, IV or I-t.
    #[arg(long)]
    pub dgp: Option<String>,
    /// Number of Monte Carlo replications.
    #[arg(long)]
    pub sims: Option<usize>,
    /// Focal times: "all", a list "10,20,30", or a range "start:end[:step]".
    /// Integers are 1-based row positions; other items are matched against time labels.
    #[arg(long)]
    pub times: Option<String>,
    /// Sample length of simulated paths (mc-study).
    #[arg(long)]
    pub t_len: Option<usize>,
    /// Transform realized variances x to 100 * sqrt(252 x) before estimation.
    #[arg(long)]
    pub annualize_rv: bool,
}

/// The TOML job file. Keys mirror the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub mode: Option<Mode>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub lags: Option<usize>,
    #[serde(rename = "H")]
    pub horizon: Option<usize>,
    #[serde(rename = "W")]
    pub bandwidth: Option<f64>,
    pub draws: Option<usize>,
    pub shrinkage: Option<f64>,
    pub first_lag_prior_mean: Option<f64>,
    pub bands: Option<String>,
    pub omega_bands: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub dgp: Option<String>,
    pub sims: Option<usize>,
    pub times: Option<String>,
    pub t_len: Option<usize>,
    pub annualize_rv: Option<bool>,
    pub probability_dates: Option<Vec<usize>>,
    pub zero_mean_log_vol_shocks: Option<bool>,
    pub noise_scale: Option<f64>,
}

impl JobFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Which focal times to estimate, before a panel is available to resolve labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TimeSelection {
    All,
    Items(Vec<TimeItem>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TimeItem {
    Index(usize),
    Label(String),
}

impl TimeSelection {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Config("empty --times".into()));
        }
        if text.eq_ignore_ascii_case("all") {
            return Ok(TimeSelection::All);
        }
        let bad = |s: &str| Error::Config(format!("--times: bad range {s:?}; expected start:end[:step]"));
        let mut items = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if part.contains(':') {
                let nums = part
                    .split(':')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad(part))?;
                let (start, end, step) = match nums[..] {
                    [a, b] => (a, b, 1),
                    [a, b, c] => (a, b, c),
                    _ => return Err(bad(part)),
                };
                if step == 0 || start > end {
                    return Err(bad(part));
                }
                items.extend((start..=end).step_by(step).map(TimeItem::Index));
            } else if let Ok(i) = part.parse::<usize>() {
                items.push(TimeItem::Index(i));
            } else {
                items.push(TimeItem::Label(part.to_string()));
            }
        }
        Ok(TimeSelection::Items(items))
    }

    /// Sorted, deduplicated 1-based focal times; labels are looked up in `labels`.
    pub fn resolve(&self, labels: Option<&[String]>) -> Result<Option<Vec<usize>>> {
        match self {
            TimeSelection::All => Ok(None),
            TimeSelection::Items(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(match item {
                        TimeItem::Index(i) => *i,
                        TimeItem::Label(l) => {
                            let labels = labels.ok_or_else(|| {
                                Error::Config(format!("time label {l:?} needs a panel; use positions"))
                            })?;
                            labels
                                .iter()
                                .position(|x| x == l)
                                .map(|p| p + 1)
                                .ok_or_else(|| Error::Config(format!("time label {l:?} not in the panel")))?
                        }
                    });
                }
                out.sort_unstable();
                out.dedup();
                Ok(Some(out))
            }
        }
    }
}

fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("bad angular frequency {s:?}"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    if let Some(rest) = s.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(PI);
        }
        let d = rest.strip_prefix('/').ok_or_else(bad)?;
        return Ok(PI / num(d)?);
    }
    if let Some(k) = s.strip_suffix("pi") {
        let k = k.trim().trim_end_matches('*');
        return Ok(num(k)? * PI);
    }
    num(s)
}

/// Parses angular-frequency bands such as `low=0:pi/5,high=pi/5:pi`.
pub fn parse_omega_bands(text: &str) -> Result<Vec<BandSpec>> {
    let mut out = Vec::new();
    for (i, item) in text.split(',').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
        let (name, range) = match item.split_once('=') {
            Some((n, r)) => (n.trim().to_string(), r),
            None => (format!("band{}", i + 1), item),
        };
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("band {item:?}: expected low:high")))?;
        out.push(BandSpec::new(name, parse_angle(lo)?, parse_angle(hi)?)?);
    }
    if out.is_empty() {
        return Err(Error::Config("no bands given".into()));
    }
    Ok(out)
}

/// A fully merged job. `run.time_grid` is resolved later against the panel.
#[derive(Debug, Clone)]
pub struct Job {
    pub mode: Mode,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub annualize_rv: bool,
    pub run: RunConfig,
    pub times: TimeSelection,
    pub study: Option<StudyConfig>,
}

impl Job {
    /// Merges flags over the job file and validates everything that does not need data.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => JobFile::load(p)?,
            None => JobFile::default(),
        };
        let mode = cli
            .mode
            .or(file.mode)
            .ok_or_else(|| Error::Config("--mode is required (estimate, mc-study or test)".into()))?;
        let out = cli
            .out
            .clone()
            .or(file.out)
            .ok_or_else(|| Error::Config("--out is required".into()))?;

        let defaults = RunConfig::default();
        let bands = match (
            cli.bands.as_ref().or(file.bands.as_ref()),
            cli.omega_bands.as_ref().or(file.omega_bands.as_ref()),
        ) {
            // A flag of either kind beats the file.
            (Some(p), _) if cli.bands.is_some() => parse_period_bands(p)?,
            (_, Some(o)) if cli.omega_bands.is_some() => parse_omega_bands(o)?,
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either bands or omega_bands, not both".into()))
            }
            (Some(p), None) => parse_period_bands(p)?,
            (None, Some(o)) => parse_omega_bands(o)?,
            (None, None) => defaults.bands.clone(),
        };
        let mut run = RunConfig {
            lags: cli.lags.or(file.lags).unwrap_or(defaults.lags),
            horizon: cli.horizon.or(file.horizon).unwrap_or(defaults.horizon),
            bandwidth: cli.bandwidth.or(file.bandwidth).unwrap_or(defaults.bandwidth),
            draws: cli.draws.or(file.draws).unwrap_or(defaults.draws),
            shrinkage: cli.shrinkage.or(file.shrinkage).unwrap_or(defaults.shrinkage),
            first_lag_prior_mean: file.first_lag_prior_mean.unwrap_or(defaults.first_lag_prior_mean),
            bands,
            seed: cli.seed.or(file.seed).unwrap_or(defaults.seed),
            time_grid: None,
        };
        let times = match cli.times.as_ref().or(file.times.as_ref()) {
            Some(t) => TimeSelection::parse(t)?,
            None => TimeSelection::All,
        };
        if let Some(w) = cli.workers.or(file.workers) {
            if w == 0 {
                return Err(Error::Config("--workers must be >= 1".into()));
            }
        }
        // Checks everything except the time grid, which needs T.
        run.validate()?;

        let input = cli.input.clone().or(file.input);
        let study = match mode {
            Mode::Estimate | Mode::Test => {
                if input.is_none() {
                    return Err(Error::Config("--input is required for this mode".into()));
                }
                None
            }
            Mode::McStudy => {
                let dgp: DgpId = cli
                    .dgp
                    .as_ref()
                    .or(file.dgp.as_ref())
                    .ok_or_else(|| Error::Config("--dgp is required for mc-study".into()))?
                    .parse()?;
                let mut d = DgpConfig::new(dgp, run.seed);
                if let Some(t) = cli.t_len.or(file.t_len) {
                    d.t_len = t;
                }
                if let Some(z) = file.zero_mean_log_vol_shocks {
                    d.zero_mean_log_vol_shocks = z;
                }
                if let Some(s) = file.noise_scale {
                    d.noise_scale = s;
                }
                run.time_grid = times.resolve(None)?;
                let mut cfg = StudyConfig::new(cli.sims.or(file.sims).unwrap_or(20), d, run.clone());
                if let Some(p) = file.probability_dates {
                    cfg.probability_dates = p;
                } else {
                    cfg.probability_dates.retain(|&u| u <= cfg.dgp.t_len);
                }
                cfg.validate()?;
                Some(cfg)
            }
        };
        Ok(Job {
            mode,
            input,
            out,
            workers: cli.workers.or(file.workers),
            annualize_rv: cli.annualize_rv || file.annualize_rv.unwrap_or(false),
            run,
            times,
            study,
        })
    }
}
