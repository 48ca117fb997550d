//! End-to-end estimation checks.

use super::common;

use dynnet::output::{read_connectedness_csv, write_connectedness_csv, write_tests_csv};
use dynnet::{Estimator, RunConfig, TimeSeriesPanel};
use nalgebra::{DMatrix, DVector};

fn panel(seed: u64, t_len: usize) -> TimeSeriesPanel {
    let mut rng = common::rng(seed);
    let phi = vec![
        DMatrix::from_row_slice(3, 3, &[0.4, 0.1, 0.0, 0.2, 0.3, 0.1, 0.0, 0.2, 0.5]),
        DMatrix::from_row_slice(3, 3, &[0.1, 0.0, 0.0, 0.0, 0.1, 0.0, 0.05, 0.0, 0.1]),
    ];
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 0.8, 0.2, 0.1, 0.2, 1.2]);
    let c = DVector::from_vec(vec![0.1, 0.0, -0.2]);
    TimeSeriesPanel::from_matrix(common::simulate_var(&mut rng, &c, &phi, &sigma, t_len)).unwrap()
}

fn small_config() -> RunConfig {
    RunConfig {
        draws: 60,
        time_grid: Some(vec![3, 40, 80, 120]),
        ..RunConfig::default()
    }
}

#[test]
fn aggregate_draws_equal_band_sums() {
    let p = panel(1, 120);
    let est = Estimator::new(&p, &small_config()).unwrap();
    let out = est.run().unwrap();
    assert_eq!(out.len(), 4);
    for f in &out {
        assert_eq!(f.bands, vec!["transitory", "persistent", "all"]);
        let n_draws = f.totals[0].len();
        assert_eq!(n_draws + f.unstable_draws, 60);
        for r in 0..n_draws {
            let s = f.totals[0][r] + f.totals[1][r];
            assert!((s - f.totals[2][r]).abs() < 1e-10);
        }
        for s in &f.summaries {
            assert!(s.total.q025 <= s.total.median && s.total.median <= s.total.q975);
            for j in 0..3 {
                assert!(s.net[j].q025 <= s.net[j].q975);
            }
        }
    }
}

#[test]
fn estimation_is_seeded_and_schedule_independent() {
    let p = panel(2, 100);
    let cfg = small_config();
    let cfg = RunConfig {
        time_grid: Some(vec![10, 50, 90]),
        ..cfg
    };
    let a = Estimator::new(&p, &cfg).unwrap().run().unwrap();
    // Focal times computed one at a time, in reverse, on a single thread.
    let est = Estimator::new(&p, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b: Vec<_> = pool.install(|| [90, 50, 10].iter().map(|&s| est.focal(s).unwrap()).collect());
    for (x, y) in a.iter().zip(b.iter().rev()) {
        assert_eq!(x.totals, y.totals);
        assert_eq!(x.summaries, y.summaries);
    }
    let other = Estimator::new(&p, &RunConfig { seed: 1, ..cfg }).unwrap().run().unwrap();
    assert_ne!(a[0].totals, other[0].totals);
}

#[test]
fn connectedness_is_invariant_to_rescaling_the_panel() {
    let p = panel(3, 100);
    let cfg = RunConfig {
        time_grid: Some(vec![20, 60]),
        ..small_config()
    };
    let base = Estimator::new(&p, &cfg).unwrap().run().unwrap();
    for c in [1e-3, 7.5, 1e4] {
        let scaled = Estimator::new(&p.scaled(c), &cfg).unwrap().run().unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            for (x, y) in a.totals.iter().flatten().zip(b.totals.iter().flatten()) {
                assert!((x - y).abs() < 1e-7, "scale {c}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn csv_outputs_round_trip() {
    let p = panel(4, 80);
    let cfg = RunConfig {
        time_grid: Some(vec![30, 70]),
        ..small_config()
    };
    let out = Estimator::new(&p, &cfg).unwrap().run().unwrap();
    let mut buf = Vec::new();
    write_connectedness_csv(&mut buf, "abc123", &p, &out).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# manifest: abc123\ntime_label,band,measure,node,median,q025,q975\n"));
    let (hash, rows) = read_connectedness_csv(&text).unwrap();
    assert_eq!(hash, "abc123");
    // 2 times x 3 bands x (1 total + 3 nodes x 3 measures)
    assert_eq!(rows.len(), 2 * 3 * 10);
    let first = &rows[0];
    assert_eq!((first.time_label.as_str(), first.band.as_str(), first.measure.as_str()), ("30", "transitory", "total"));
    assert_eq!(first.summary, out[0].summaries[0].total);
    let net = rows
        .iter()
        .find(|r| r.time_label == "70" && r.band == "all" && r.measure == "net" && r.node == "x2")
        .unwrap();
    assert_eq!(net.summary, out[1].summaries[2].net[1]);

    let mut buf = Vec::new();
    write_tests_csv(&mut buf, "abc123", &p, &out).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "time_label,band_a,band_b,statistic,nse,reject_5pct,prob_a_gt_b");
    assert_eq!(lines.len(), 2 + 2);
    assert!(lines[2].starts_with("30,transitory,persistent,"));
}

#[test]
fn constant_var_has_stable_connectedness() {
    let p = panel(5, 400);
    let cfg = RunConfig {
        bandwidth: 18.0,
        draws: 100,
        time_grid: Some((40..=360).step_by(40).collect()),
        ..RunConfig::default()
    };
    let out = Estimator::new(&p, &cfg).unwrap().run().unwrap();
    let medians: Vec<f64> = out.iter().map(|f| f.summaries[2].total.median).collect();
    let mean = medians.iter().sum::<f64>() / medians.len() as f64;
    let sd = (medians.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / medians.len() as f64).sqrt();
    assert!(sd / mean < 0.2, "cv {}", sd / mean);
}

#[test]
fn invalid_configurations_are_rejected_before_compute() {
    let p = panel(6, 50);
    let bad = [
        RunConfig { bandwidth: 0.0, ..RunConfig::default() },
        RunConfig { draws: 1, ..RunConfig::default() },
        RunConfig { shrinkage: -1.0, ..RunConfig::default() },
        RunConfig { time_grid: Some(vec![2]), ..RunConfig::default() },
        RunConfig { time_grid: Some(vec![51]), ..RunConfig::default() },
    ];
    for cfg in bad {
        let r = Estimator::new(&p, &cfg).and_then(|e| e.run());
        assert!(r.is_err(), "{cfg:?}");
    }
}
