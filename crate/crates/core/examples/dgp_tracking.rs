//! Prints true and fitted total connectedness for a small Monte Carlo study.
//!
//! ```text
//! cargo run --release -p dynnet-core --example dgp_tracking -- II 10
//! ```

use dynnet::{run_mc_study, DgpConfig, DgpId, RunConfig, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dgp: DgpId = args.next().as_deref().unwrap_or("I").parse()?;
    let sims: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let run = RunConfig {
        bandwidth: 8.0,
        draws: 200,
        time_grid: Some((10..=1000).step_by(30).collect()),
        ..RunConfig::default()
    };
    let report = run_mc_study(&StudyConfig::new(sims, DgpConfig::new(dgp, 20_240_601), run))?;
    for s in &report.series {
        println!("band {:>4}: coverage {:.2}", s.band, s.coverage);
        println!("     t    true   fitted  [q025, q975]");
        for (i, t) in report.times.iter().enumerate() {
            let f = &s.fitted[i];
            let truth = s.true_median[i];
            let inside = truth.is_some_and(|v| v >= f.q025 && v <= f.q975);
            println!(
                "  {t:4} {:7.2} {:7.2}  [{:6.2}, {:6.2}] {}",
                truth.unwrap_or(f64::NAN),
                f.median,
                f.q025,
                f.q975,
                if inside { "" } else { "outside" }
            );
        }
    }
    for row in &report.probability_table {
        println!(
            "Pr(low > high) at u = {}: true {} fitted {:.2}",
            row.u,
            row.true_probability.map_or("n/a".to_string(), |p| format!("{p:.2}")),
            row.fitted_probability
        );
    }
    Ok(())
}
