use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pmq::experiment::{run, ExperimentConfig, ExperimentId};

/// Seeded partial-match-query campaigns.
#[derive(Debug, Parser)]
#[command(name = "pmq", version)]
struct Args {
    /// One of theorem1, uniform, x0, coupling, drift, boundedness.
    #[arg(long)]
    experiment: ExperimentId,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    replicas: u64,
    /// Point counts, times or coupling horizons, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,1000")]
    sizes: Vec<f64>,
    /// Query coordinates in [0, 1], comma separated.
    #[arg(long = "x", value_delimiter = ',', default_value = "0.5")]
    x_values: Vec<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit with status 3 if an acceptance threshold is missed.
    #[arg(long)]
    check: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

fn main() -> ExitCode {
    let args = Args::parse();
    let config = ExperimentConfig {
        experiment: args.experiment,
        seed: args.seed,
        replicas: args.replicas,
        sizes: args.sizes,
        x_values: args.x_values,
        out: args.out,
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for r in &report.rows {
        println!(
            "{:<24} size={:<10} x={:<6} mean={:.6} ±{:.6} theory={:.6} ratio={:.4}",
            r.quantity, r.size, r.x, r.mean, r.ci_half_width, r.theory, r.ratio
        );
    }
    if args.check {
        let failures = report.check();
        for f in &failures {
            eprintln!("check failed: {f}");
        }
        if !failures.is_empty() {
            return ExitCode::from(EXIT_CHECK);
        }
    }
    ExitCode::SUCCESS
}
