//! `fockslice` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 threshold or invariant failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fockslice::experiment::{load_config, run, verify, write_outputs, ExperimentConfig, ExperimentError};

const DEFAULT_OUT_DIR: &str = "fockslice-out";

#[derive(Parser)]
#[command(name = "fockslice", version, about = "Sliced coherent-state propagators on truncated Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write convergence.csv and summary.txt.
    Run(Common),
    /// Run the invariant suite and print one line per check.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; optional when --preset is given.
    config: Option<PathBuf>,
    /// Preset supplying default keys: free, harmonic, kerr, phi4.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one configuration key, e.g. `--override cutoff=30`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, ExperimentError> {
        if self.config.is_none() && self.preset.is_none() {
            return Err(ExperimentError::Config("give a config file or --preset".into()));
        }
        load_config(self.config.as_deref(), self.preset.as_deref(), &self.overrides, self.out.as_deref())
    }
}

fn run_command(args: &Common) -> Result<(), ExperimentError> {
    let cfg = args.load()?;
    let outcome = run(&cfg)?;
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let (csv, summary) = write_outputs(&outcome, &dir)
        .map_err(|e| ExperimentError::Numeric(format!("cannot write to {}: {e}", dir.display())))?;
    print!("{}", outcome.summary);
    println!("wrote {} and {}", csv.display(), summary.display());
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(ExperimentError::Threshold(outcome.failures.join("; ")))
    }
}

fn verify_command(args: &Common) -> Result<(), ExperimentError> {
    let cfg = args.load()?;
    let report = verify(&cfg)?;
    print!("{report}");
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        Err(ExperimentError::Threshold(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Verify(args) => verify_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fockslice: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
