//! `sns`: command-line driver for the stochastic Navier-Stokes simulator.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{BoundArgs, Exit, Failure};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "sns", version, about = "Stochastic Navier-Stokes Galerkin simulations and bound checks")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "sns-out")]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one path and write its CSV.
    Simulate,
    /// Run the spectral invariants, bilinear probes and noise verifier.
    Verify {
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Run an ensemble and the statistical checks of the bound.
    Ensemble,
    /// Bilinear probe constants only.
    Constants {
        #[arg(long, default_value_t = sns_core::ensemble::CALIBRATION_SAMPLES)]
        samples: usize,
    },
    /// Print exponents, delta(epsilon) and the bound curve as CSV.
    Bound(BoundFlags),
}

#[derive(Args)]
struct BoundFlags {
    #[arg(long, default_value_t = 1.5)]
    a: f64,
    #[arg(long, default_value_t = 1.5)]
    b: f64,
    #[arg(long = "c1")]
    c1: Option<f64>,
    #[arg(long = "c2", default_value_t = 1.0)]
    c2: f64,
    /// Use the H^m variant of this order (needs --c3).
    #[arg(long = "hm")]
    hm: Option<f64>,
    #[arg(long = "c3")]
    c3: Option<f64>,
    #[arg(long = "c4", default_value_t = 1.0)]
    c4: f64,
    /// Noise intensities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Curve samples between 0 and the threshold.
    #[arg(long, default_value_t = 21)]
    points: usize,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::config("--config <path> is required"))?;
    ExperimentConfig::load(path).map_err(|m| Failure::config(format!("config error: {m}")))
}

fn run(cli: &Cli) -> Result<Exit, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let outcome = match &cli.command {
        Command::Simulate => commands::simulate(&load(cli)?, &cli.out),
        Command::Verify { samples } => commands::verify(&load(cli)?, &cli.out, *samples),
        Command::Ensemble => commands::ensemble(&load(cli)?, &cli.out),
        Command::Constants { samples } => commands::constants(&load(cli)?, &cli.out, *samples),
        Command::Bound(f) => {
            let args = BoundArgs {
                a: f.a,
                b: f.b,
                c1: f.c1,
                c2: f.c2,
                hm_order: f.hm,
                c3: f.c3,
                c4: f.c4,
                sigma: f.sigma.clone(),
                epsilon: f.epsilon,
                points: f.points,
            };
            let table = commands::bound(&args)?;
            print!("{table}");
            return Ok(Exit::Ok);
        }
    };
    outcome.map(|(exit, _)| exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.exit as u8)
        }
    }
}
