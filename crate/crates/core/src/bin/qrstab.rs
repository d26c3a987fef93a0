use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qrstab::cli::{self, AnalysisConfig, Command, ExitStatus, Overrides};

#[derive(Parser)]
#[command(name = "qrstab", version, about = "Mean-square stability certificates for perturbed quantum linear systems")]
struct Args {
    #[command(subcommand)]
    command: Sub,
    /// Seed for randomized oracle checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Per-mode Fock cutoff for simulation and verification.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Report path; overrides `outputs.report_path`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Build the envelope and solve for a certificate.
    Analyze { config: PathBuf },
    /// Certify, then integrate the master equation and compare with the bound.
    Simulate { config: PathBuf },
    /// Run the truncated-Fock identity and positivity checks.
    Verify { config: PathBuf },
    /// Evaluate a grid of mu1 values and pick the best.
    Scan { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QRSTAB_LOG")).init();
    let args = Args::parse();
    let (command, path) = match args.command {
        Sub::Analyze { config } => (Command::Analyze, config),
        Sub::Simulate { config } => (Command::Simulate, config),
        Sub::Verify { config } => (Command::Verify, config),
        Sub::Scan { config } => (Command::Scan, config),
    };
    let overrides = Overrides { seed: args.seed, cutoff: args.cutoff, out: args.out };
    let status = AnalysisConfig::load(&path).and_then(|cfg| cli::run(command, &cfg, &overrides));
    match status {
        Ok(s) => ExitCode::from(s as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::of_error(&e) as u8)
        }
    }
}
