//! Executes a validated job: compute everything in memory, then write artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dynnet::output::{
    write_connectedness_csv, write_joint_tests_csv, write_probabilities_csv, write_tests_csv,
};
use dynnet::panel::format_f64;
use dynnet::{
    annualize_rv, load_panel, run_mc_study, Error, Estimator, Result, RunConfig, StudyConfig,
    StudyReport, TimeSeriesPanel,
};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::job::{Job, Mode};

/// Version of the manifest layout.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Everything that determines the numeric outputs. Its SHA-256 is the manifest hash.
#[derive(Debug, Serialize)]
struct Canonical<'a> {
    schema_version: u32,
    mode: Mode,
    run: &'a RunConfig,
    input_sha256: Option<&'a str>,
    annualize_rv: bool,
    study: Option<&'a StudyConfig>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn manifest_hash(c: &Canonical<'_>) -> String {
    sha256_hex(&serde_json::to_vec(c).expect("config serializes"))
}

/// Named in-memory artifacts, written only once everything has been computed.
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file via a temporary name and rename, so a crash never leaves half a file.
    fn write_all(&self, dir: &Path) -> Result<()> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            let io = |source| Error::Io {
                path: path.display().to_string(),
                source,
            };
            std::fs::write(&tmp, bytes).map_err(io)?;
            std::fs::rename(&tmp, &path).map_err(io)?;
        }
        Ok(())
    }
}

/// Creates the output directory; failure is a configuration problem.
fn prepare_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("output directory {}: {e}", out.display())))?;
    let probe = out.join(".dynnet-write-check");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", out.display())))
}

fn manifest(
    job: &Job,
    hash: &str,
    canonical: &Canonical<'_>,
    input: Option<(&Path, &TimeSeriesPanel)>,
    outputs: Vec<String>,
    extra: Value,
    elapsed: f64,
) -> Vec<u8> {
    let input = input.map(|(path, panel)| {
        json!({
            "path": path.display().to_string(),
            "sha256": canonical.input_sha256,
            "rows": panel.len(),
            "series": panel.series_names(),
        })
    });
    let value = json!({
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": "dynnet",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "manifest_hash": hash,
        "mode": job.mode,
        "config": canonical,
        "input": input,
        "workers": rayon::current_num_threads(),
        "design_notes": dynnet::DESIGN_NOTES,
        "outputs": outputs,
        "summary": extra,
        "timing": { "elapsed_seconds": elapsed },
    });
    let mut bytes = serde_json::to_vec_pretty(&value).expect("manifest serializes");
    bytes.push(b'\n');
    bytes
}

/// Runs the job and returns the machine-readable summary printed on stdout.
pub fn execute(job: &Job) -> Result<Value> {
    match job.mode {
        Mode::Estimate | Mode::Test => estimate(job),
        Mode::McStudy => study(job),
    }
}

fn load_input(job: &Job) -> Result<(PathBuf, Vec<u8>, TimeSeriesPanel)> {
    let path = job.input.clone().expect("validated");
    let bytes = std::fs::read(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut panel = load_panel(&path)?;
    if job.annualize_rv {
        panel = annualize_rv(&panel)?;
    }
    Ok((path, bytes, panel))
}

fn estimate(job: &Job) -> Result<Value> {
    let started = Instant::now();
    let (path, bytes, panel) = load_input(job)?;
    let input_sha = sha256_hex(&bytes);
    let run = RunConfig {
        time_grid: job.times.resolve(Some(panel.time_labels()))?,
        ..job.run.clone()
    };
    run.validate()?;
    let times = run.focal_times(panel.len())?;
    let estimator = Estimator::new(&panel, &run)?;
    prepare_out_dir(&job.out)?;

    let canonical = Canonical {
        schema_version: MANIFEST_SCHEMA_VERSION,
        mode: job.mode,
        run: &run,
        input_sha256: Some(&input_sha),
        annualize_rv: job.annualize_rv,
        study: None,
    };
    let hash = manifest_hash(&canonical);
    log::info!(
        "estimating {} focal times on {} series x {} observations ({} draws each)",
        times.len(),
        panel.n_series(),
        panel.len(),
        run.draws
    );
    let estimates = estimator.run()?;
    let unstable: usize = estimates.iter().map(|e| e.unstable_draws).sum();
    if unstable > 0 {
        log::warn!("{unstable} posterior draws stayed unstable and were excluded");
    }

    let mut art = Artifacts::new();
    if job.mode == Mode::Estimate {
        let mut buf = Vec::new();
        write_connectedness_csv(&mut buf, &hash, &panel, &estimates)?;
        art.add("connectedness.csv", buf);
    }
    let mut buf = Vec::new();
    write_tests_csv(&mut buf, &hash, &panel, &estimates)?;
    art.add("tests.csv", buf);
    let mut buf = Vec::new();
    write_probabilities_csv(&mut buf, &hash, &panel, &estimates)?;
    art.add("probabilities.csv", buf);
    let mut buf = Vec::new();
    write_joint_tests_csv(&mut buf, &hash, &panel, &estimates)?;
    art.add("joint_tests.csv", buf);

    let n_bands = estimates.first().map_or(0, |e| e.bands.len() - 1);
    let mut rejections = Vec::new();
    for a in 0..n_bands {
        for b in a + 1..n_bands {
            let count = estimates
                .iter()
                .filter(|e| e.compare(a, b).0.is_ok_and(|t| t.reject))
                .count();
            rejections.push(json!({
                "band_a": estimates[0].bands[a],
                "band_b": estimates[0].bands[b],
                "rejections_5pct": count,
            }));
        }
    }
    let summary = json!({
        "manifest_hash": hash,
        "focal_times": times.len(),
        "unstable_draws": unstable,
        "tests": rejections,
    });
    let mut outputs = art.names();
    outputs.push("manifest.json".into());
    let m = manifest(
        job,
        &hash,
        &canonical,
        Some((&path, &panel)),
        outputs.clone(),
        summary.clone(),
        started.elapsed().as_secs_f64(),
    );
    art.add("manifest.json", m);
    art.write_all(&job.out)?;
    Ok(json!({ "out": job.out.display().to_string(), "outputs": outputs, "summary": summary }))
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn study_csvs(hash: &str, report: &StudyReport) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let mut prob = format!("# manifest: {hash}\nu,true_probability,fitted_probability\n");
    for r in &report.probability_table {
        let _ = writeln!(prob, "{},{},{}", r.u, opt(r.true_probability), format_f64(r.fitted_probability));
    }
    let mut track = format!("# manifest: {hash}\ntime,band,true_median,fitted_median,fitted_q025,fitted_q975\n");
    for s in &report.series {
        for (i, t) in report.times.iter().enumerate() {
            let f = &s.fitted[i];
            let _ = writeln!(
                track,
                "{t},{},{},{},{},{}",
                s.band,
                opt(s.true_median[i]),
                format_f64(f.median),
                format_f64(f.q025),
                format_f64(f.q975)
            );
        }
    }
    let mut wald = format!("# manifest: {hash}\ntime,median_statistic,median_nse,reject_fraction\n");
    for (i, t) in report.times.iter().enumerate() {
        let _ = writeln!(
            wald,
            "{t},{},{},{}",
            opt(report.wald.median_statistic[i]),
            opt(report.wald.median_nse[i]),
            format_f64(report.wald.reject_fraction[i])
        );
    }
    (prob.into_bytes(), track.into_bytes(), wald.into_bytes())
}

fn study(job: &Job) -> Result<Value> {
    let started = Instant::now();
    let cfg = job.study.as_ref().expect("validated");
    prepare_out_dir(&job.out)?;
    let effective = cfg.effective_run()?;
    let canonical = Canonical {
        schema_version: MANIFEST_SCHEMA_VERSION,
        mode: job.mode,
        run: &effective,
        input_sha256: None,
        annualize_rv: false,
        study: Some(cfg),
    };
    let hash = manifest_hash(&canonical);
    log::info!(
        "DGP {}: {} simulations of length {}, {} focal times each",
        cfg.dgp.dgp,
        cfg.n_sims,
        cfg.dgp.t_len,
        effective.time_grid.as_ref().map_or(0, Vec::len)
    );
    let report = run_mc_study(cfg)?;

    let mut art = Artifacts::new();
    let mut json_bytes = serde_json::to_vec(&report).expect("report serializes");
    json_bytes.push(b'\n');
    art.add("report.json", json_bytes);
    let (prob, track, wald) = study_csvs(&hash, &report);
    art.add("probability_table.csv", prob);
    art.add("tracking.csv", track);
    art.add("wald.csv", wald);

    let summary = json!({
        "manifest_hash": hash,
        "dgp": cfg.dgp.dgp.to_string(),
        "n_sims": cfg.n_sims,
        "probability_table": report.probability_table,
        "coverage": report.series.iter().map(|s| json!({"band": s.band, "coverage": s.coverage})).collect::<Vec<_>>(),
        "regenerations": report.simulations.iter().map(|s| s.regenerations).sum::<usize>(),
    });
    let mut outputs = art.names();
    outputs.push("manifest.json".into());
    let m = manifest(job, &hash, &canonical, None, outputs.clone(), summary.clone(), started.elapsed().as_secs_f64());
    art.add("manifest.json", m);
    art.write_all(&job.out)?;
    Ok(json!({ "out": job.out.display().to_string(), "outputs": outputs, "summary": summary }))
}
