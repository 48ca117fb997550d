//! Acceptance criteria 1-9. Each test prints one `criterion N: PASS/FAIL` line.

mod common;

use std::sync::OnceLock;

use dynnet::bands::BandPartition;
use dynnet::connectedness::{partition_connectedness, reconstruct_time_domain};
use dynnet::spectral::{partition_adjacency, VmaSpectrum};
use dynnet::{run_mc_study, DgpConfig, DgpId, Estimator, RunConfig, StudyConfig, StudyReport, TimeSeriesPanel};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const STUDY_SEED: u64 = 20_240_601;

/// Appendix C table, fitted probabilities at W = 8 for u = 400 / 650 / 1000.
const PAPER_W8: [(DgpId, [f64; 3]); 3] = [
    (DgpId::II, [0.00, 1.00, 0.00]),
    (DgpId::III, [0.00, 0.90, 0.00]),
    (DgpId::IV, [0.97, 0.00, 0.00]),
];
const PROBABILITY_TOLERANCE: f64 = 0.15;

fn criterion1_config(dgp: DgpId) -> StudyConfig {
    let run = RunConfig {
        bandwidth: 8.0,
        draws: 500,
        horizon: 100,
        time_grid: Some(vec![]),
        ..RunConfig::default()
    };
    StudyConfig::new(20, DgpConfig::new(dgp, STUDY_SEED), run)
}

fn criterion1_reports() -> Vec<String> {
    PAPER_W8
        .iter()
        .map(|(dgp, _)| serde_json::to_string(&run_mc_study(&criterion1_config(*dgp)).unwrap()).unwrap())
        .collect()
}

fn criterion1_json() -> &'static Vec<String> {
    static CELL: OnceLock<Vec<String>> = OnceLock::new();
    CELL.get_or_init(criterion1_reports)
}

#[test]
fn criterion_1_probability_table() {
    let mut pass = true;
    let mut cells = Vec::new();
    for ((dgp, paper), json) in PAPER_W8.iter().zip(criterion1_json()) {
        let report: StudyReport = serde_json::from_str(json).unwrap();
        for (u, target) in [400, 650, 1000].iter().zip(paper) {
            let row = report.probability_at(*u).unwrap();
            let ok = (row.fitted_probability - target).abs() <= PROBABILITY_TOLERANCE;
            pass &= ok;
            cells.push(format!(
                "{dgp}@{u}: fitted {:.2} vs paper {target:.2} (true {}){}",
                row.fitted_probability,
                row.true_probability.map_or("n/a".into(), |p| format!("{p:.2}")),
                if ok { "" } else { " x" }
            ));
        }
    }
    common::report(1, pass, &cells.join("; "));
    assert!(pass, "fitted probabilities outside ±{PROBABILITY_TOLERANCE} of the paper");
}

#[test]
fn criterion_9_determinism() {
    let first = criterion1_json();
    let second = criterion1_reports();
    let pass = *first == second;
    let bytes: usize = second.iter().map(String::len).sum();
    common::report(9, pass, &format!("two criterion-1 runs, {bytes} bytes of JSON, identical = {pass}"));
    assert!(pass);
}

fn tracking_study(dgp: DgpId) -> StudyReport {
    let run = RunConfig {
        bandwidth: 8.0,
        draws: 500,
        time_grid: Some((5..=1000).step_by(5).collect()),
        ..RunConfig::default()
    };
    run_mc_study(&StudyConfig::new(10, DgpConfig::new(dgp, STUDY_SEED), run)).unwrap()
}

fn tracking_studies() -> &'static Vec<(DgpId, StudyReport)> {
    static CELL: OnceLock<Vec<(DgpId, StudyReport)>> = OnceLock::new();
    CELL.get_or_init(|| {
        [DgpId::I, DgpId::II, DgpId::III, DgpId::IV]
            .into_iter()
            .map(|d| (d, tracking_study(d)))
            .collect()
    })
}

#[test]
fn criterion_2_tracking_coverage() {
    let mut pass = true;
    let mut cells = Vec::new();
    for (dgp, report) in tracking_studies() {
        for s in &report.series {
            pass &= s.coverage >= 0.8;
            cells.push(format!("{dgp}/{} {:.2}", s.band, s.coverage));
        }
    }
    common::report(2, pass, &format!("coverage (need >= 0.80): {}", cells.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_3_heterogeneity_test_after_the_break() {
    let (_, report) = tracking_studies().iter().find(|(d, _)| *d == DgpId::I).unwrap();
    let share = |lo: usize, hi: usize| {
        let idx: Vec<usize> = (0..report.times.len())
            .filter(|&i| (lo..=hi).contains(&report.times[i]))
            .collect();
        let above = idx
            .iter()
            .filter(|&&i| report.wald.median_statistic[i].is_some_and(|s| s > 3.84))
            .count();
        above as f64 / idx.len() as f64
    };
    let after = share(550, 950);
    let before = share(50, 450);
    let pass = after >= 0.7 && before <= 0.2;
    common::report(
        3,
        pass,
        &format!("median statistic > 3.84 on {after:.2} of t in [550,950] (need >= 0.70), {before:.2} of t in [50,450] (need <= 0.20)"),
    );
    assert!(pass);
}

/// 100 random stable systems with N cycling through {2, 3, 5}.
fn random_systems() -> Vec<(Vec<DMatrix<f64>>, DMatrix<f64>)> {
    let mut rng = common::rng(404);
    (0..100)
        .map(|i| {
            let n = [2, 3, 5][i % 3];
            let p = rng.random_range(1..=3);
            let radius = rng.random_range(0.3..0.97);
            (common::random_stable_lags(&mut rng, n, p, radius), common::random_spd(&mut rng, n))
        })
        .collect()
}

#[test]
fn criteria_4_5_6_spectral_identities() {
    let horizon = 100;
    let partition = BandPartition::low_high(horizon).unwrap();
    let full = BandPartition::full(horizon).unwrap();
    let (mut err4, mut err5, mut err6) = (0.0f64, 0.0f64, 0.0f64);
    for (phi, sigma) in random_systems() {
        let spectrum = VmaSpectrum::from_lags(&phi, horizon);
        let bands = partition_adjacency(&spectrum, &sigma, &partition).unwrap();
        let whole = partition_adjacency(&spectrum, &sigma, &full).unwrap();

        let sets = partition_connectedness(&bands).unwrap();
        let rebuilt = reconstruct_time_domain(&sets, &partition).unwrap();
        let target = partition_connectedness(&whole).unwrap().remove(0);
        err4 = err4.max((rebuilt.total - target.total).abs());
        for j in 0..phi[0].nrows() {
            err4 = err4
                .max((rebuilt.from_degree[j] - target.from_degree[j]).abs())
                .max((rebuilt.to_degree[j] - target.to_degree[j]).abs())
                .max((rebuilt.net[j] - target.net[j]).abs());
        }

        let oracle = common::time_domain_gfevd(&phi, &sigma, horizon);
        err5 = err5.max((&whole[0].theta - oracle).amax());

        let n = sigma.nrows();
        for a in 0..n {
            let by_band: f64 = bands.iter().map(|b| b.theta.row(a).sum()).sum();
            err6 = err6.max((by_band - 1.0).abs()).max((whole[0].theta.row(a).sum() - 1.0).abs());
        }
    }
    common::report(4, err4 < 1e-10, &format!("max reconstruction error {err4:.2e} over 100 draws (tol 1e-10)"));
    common::report(5, err5 < 1e-8, &format!("max |spectral - time-domain GFEVD| {err5:.2e} (tol 1e-8)"));
    common::report(6, err6 < 1e-10, &format!("max |row sum - 1| {err6:.2e} (tol 1e-10)"));
    assert!(err4 < 1e-10 && err5 < 1e-8 && err6 < 1e-10);
}

#[test]
fn criterion_7_constant_var_has_no_spurious_variation() {
    // A moderately connected system: at W = 18 the kernel keeps about 64 effective
    // observations, and the sampling noise of a local estimate is roughly constant in
    // absolute terms, so the CV of a weakly connected system is mostly noise/level.
    let mut rng = common::rng(7);
    let phi = vec![DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.1, 0.4, 0.1, 0.0, 0.2, 0.3])];
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.7, 0.35, 0.7, 1.0, 0.525, 0.35, 0.525, 1.0]);
    let values = common::simulate_var(&mut rng, &DVector::zeros(3), &phi, &sigma, 1000);
    let panel = TimeSeriesPanel::from_matrix(values).unwrap();
    let spectrum = VmaSpectrum::from_lags(&phi, 100);
    let full = BandPartition::full(100).unwrap();
    let truth = partition_connectedness(&partition_adjacency(&spectrum, &sigma, &full).unwrap()).unwrap()[0].total;
    let cfg = RunConfig {
        lags: 1,
        bandwidth: 18.0,
        draws: 200,
        time_grid: Some((10..=1000).step_by(10).collect()),
        ..RunConfig::default()
    };
    let fits = Estimator::new(&panel, &cfg).unwrap().run().unwrap();
    let aggregate = fits[0].bands.len() - 1;
    let medians: Vec<f64> = fits.iter().map(|f| f.summaries[aggregate].total.median).collect();
    let mean = medians.iter().sum::<f64>() / medians.len() as f64;
    let sd = (medians.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (medians.len() - 1) as f64).sqrt();
    let cv = sd / mean;
    common::report(
        7,
        cv < 0.2,
        &format!("CV of posterior-median total connectedness {cv:.3} (mean {mean:.2}, truth {truth:.2}; need < 0.2)"),
    );
    assert!(cv < 0.2);
}

#[test]
fn criterion_8_transitory_and_persistent_cross_responses() {
    // Variable b (index 1) responds to a shock in a (index 0); b's own shock is persistent.
    let horizon = 100;
    let partition = BandPartition::low_high(horizon).unwrap();
    let low = partition.index_of("low").unwrap();
    let high = partition.index_of("high").unwrap();
    let build = |cross: &dyn Fn(usize) -> f64| {
        let psi: Vec<DMatrix<f64>> = (0..horizon)
            .map(|h| {
                let own = 0.9f64.powi(h as i32);
                DMatrix::from_row_slice(2, 2, &[if h == 0 { 1.0 } else { 0.0 }, 0.0, cross(h), own])
            })
            .collect();
        let adj = partition_adjacency(&VmaSpectrum::from_psi(psi), &DMatrix::identity(2, 2), &partition).unwrap();
        (adj[low].theta[(1, 0)], adj[high].theta[(1, 0)])
    };
    // Unit rise that returns to zero the next period.
    let (tl, th) = build(&|h| if h == 0 { 1.0 } else { 0.0 });
    // Unit rise that decays gradually.
    let (pl, ph) = build(&|h| 0.9f64.powi(h as i32));
    let pass = th > tl && pl > ph;
    common::report(
        8,
        pass,
        &format!("transitory: high {th:.3} > low {tl:.3}; persistent: low {pl:.3} > high {ph:.3}"),
    );
    assert!(pass);
}
