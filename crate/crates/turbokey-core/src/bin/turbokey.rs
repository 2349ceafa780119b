//! Command-line front end: runs BER and secret-key-rate sweeps over
//! turbulent-channel parameter grids and writes plot-ready CSV or JSON.
//!
//! Exit codes: 0 on success, 1 when some grid points failed numerically
//! (their rows carry an error marker), 2 on config or I/O problems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use turbokey_core::sweep::{run_sweep, OutputFormat, SweepConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "turbokey",
    about = "BER and post-selection secret key rate sweeps for BPSK links over log-normal turbulent channels"
)]
struct Cli {
    /// Sweep description (flat key-value file; see the project README).
    config: PathBuf,

    /// Override the configured output path.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Override the configured output format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// Size of the worker pool (default: one worker per logical CPU).
    /// Output bytes do not depend on this.
    #[arg(long)]
    threads: Option<usize>,

    /// Override the Monte Carlo seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut config = match SweepConfig::from_file(&cli.config) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("turbokey: {e}");
            return ExitCode::from(2);
        }
    };
    config.override_output(
        cli.output,
        cli.format.map(|f| match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }),
    );
    config.override_seed(cli.seed);

    let run = || match run_sweep(&config) {
        Ok(summary) => {
            eprintln!(
                "turbokey: wrote {} rows to {}{}",
                summary.rows,
                summary.output_path.display(),
                if summary.numerical_failures > 0 {
                    format!(" ({} rows failed numerically)", summary.numerical_failures)
                } else {
                    String::new()
                }
            );
            if summary.numerical_failures > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("turbokey: {e}");
            ExitCode::from(2)
        }
    };

    match cli.threads {
        Some(threads) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool,
                Err(e) => {
                    eprintln!("turbokey: cannot build worker pool: {e}");
                    return ExitCode::from(2);
                }
            };
            pool.install(run)
        }
        None => run(),
    }
}
