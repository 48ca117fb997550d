//! `dynnet`: estimate time-varying frequency-band connectedness or run Monte Carlo studies.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.

mod job;
mod modes;

use std::process::ExitCode;

use clap::Parser;
use dynnet::{Error, ErrorKind};

use crate::job::{Cli, Job};

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn run(cli: &Cli) -> Result<serde_json::Value, Error> {
    let job = Job::from_cli(cli)?;
    if let Some(w) = job.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    modes::execute(&job)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
