//! End-to-end runs of the `dynnet` binary.

use std::path::Path;
use std::process::{Command, Output};

fn dynnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

/// A small bivariate VAR(1) panel with date labels.
fn write_panel(path: &Path, t_len: usize) {
    let mut x = [0.0f64, 0.0];
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut uniform = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut text = String::from("date,alpha,beta\n");
    for t in 0..t_len {
        let e = [uniform(), uniform()];
        x = [0.5 * x[0] + 0.2 * x[1] + e[0], 0.1 * x[0] + 0.4 * x[1] + 0.5 * e[0] + e[1]];
        text.push_str(&format!("d{t:04},{},{}\n", x[0], x[1]));
    }
    std::fs::write(path, text).unwrap();
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn estimate_writes_artifacts_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("panel.csv");
    write_panel(&input, 120);
    let run = |out: &str| {
        let out = dir.path().join(out);
        let o = dynnet(&[
            "--mode", "estimate",
            "--input", input.to_str().unwrap(),
            "--out", out.to_str().unwrap(),
            "--draws", "40",
            "--times", "30:90:30,d0100",
            "--W", "10",
            "--seed", "5",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (out, o)
    };
    let (a, out) = run("a");
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["summary"]["focal_times"], 4);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["manifest_hash"].as_str().unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["config"]["run"]["bandwidth"], 10.0);
    assert!(manifest["design_notes"].as_array().unwrap().len() > 3);
    for f in ["connectedness.csv", "tests.csv", "probabilities.csv", "joint_tests.csv"] {
        assert_eq!(first_line(&a.join(f)), format!("# manifest: {hash}"), "{f}");
    }
    let text = std::fs::read_to_string(a.join("connectedness.csv")).unwrap();
    let (_, rows) = dynnet::output::read_connectedness_csv(&text).unwrap();
    // 4 times x 3 bands x (total + 2 nodes x 3 measures)
    assert_eq!(rows.len(), 4 * 3 * 7);
    assert!(rows.iter().any(|r| r.time_label == "d0100" && r.node == "beta"));

    let (b, _) = run("b");
    for f in ["connectedness.csv", "tests.csv", "probabilities.csv", "joint_tests.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn test_mode_writes_only_tests() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("panel.csv");
    write_panel(&input, 80);
    let out = dir.path().join("out");
    let o = dynnet(&[
        "--mode", "test",
        "--input", input.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
        "--draws", "30",
        "--times", "40",
        "--omega-bands", "low=0:pi/5,mid=pi/5:pi/2,high=pi/2:pi",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("connectedness.csv").exists());
    let tests = std::fs::read_to_string(out.join("tests.csv")).unwrap();
    // three band pairs at one focal time
    assert_eq!(tests.lines().count(), 2 + 3);
    let joint = std::fs::read_to_string(out.join("joint_tests.csv")).unwrap();
    let row = joint.lines().nth(2).unwrap();
    assert!(row.starts_with("d0039,low|mid|high,"), "{row}");
}

#[test]
fn missing_input_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dynnet(&[
        "--mode", "estimate",
        "--input", dir.path().join("nope.csv").to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));
    assert!(!out.exists());
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("panel.csv");
    write_panel(&input, 50);
    let out = dir.path().join("out");
    let base = ["--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let cases: Vec<Vec<&str>> = vec![
        vec!["--mode", "estimate", "--bands", "1:5,6:inf"],
        vec!["--mode", "estimate", "--W", "0"],
        vec!["--mode", "estimate", "--times", "200"],
        vec!["--mode", "mc-study", "--dgp", "VII"],
        vec!["--mode", "mc-study"],
        vec!["--mode", "nonsense"],
    ];
    for case in cases {
        let mut args = case.clone();
        args.extend_from_slice(&base);
        let o = dynnet(&args);
        assert_eq!(o.status.code(), Some(2), "{case:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.join("manifest.json").exists());
    }
}

#[test]
fn mc_study_single_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let job = dir.path().join("job.toml");
    std::fs::write(
        &job,
        "mode = \"mc-study\"\ndgp = \"II\"\nsims = 3\nt_len = 150\ndraws = 25\ntimes = \"50:150:50\"\nprobability_dates = [100, 150]\n",
    )
    .unwrap();
    // Flags override the file.
    let o = dynnet(&["--config", job.to_str().unwrap(), "--sims", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: dynnet::StudyReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.simulations.len(), 1);
    assert_eq!(report.times, vec![50, 100, 150]);
    assert_eq!(report.probability_table.len(), 2);
    let table = std::fs::read_to_string(out.join("probability_table.csv")).unwrap();
    assert_eq!(table.lines().nth(1), Some("u,true_probability,fitted_probability"));
    assert_eq!(table.lines().count(), 4);
    for f in ["tracking.csv", "wald.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
