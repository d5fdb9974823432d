mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};
use config::{CommonArgs, Settings};
use error::CliResult;
use std::path::PathBuf;
use std::process::ExitCode;

/// Regularized Tucker decomposition with exact or leverage-score-sketched core updates
#[derive(Parser, Debug)]
#[command(name = "ridge-tucker", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a planted Tucker tensor with sparse Gaussian noise, plus a JSON sidecar
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Base name of the output files
        #[arg(long, default_value = "tensor")]
        name: String,
    },
    /// Run ALS and write model.dtuk, history.csv, timing.csv and summary.json
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare exact and sketched core updates over a grid and write benchmark.csv
    Benchmark {
        #[command(flatten)]
        common: CommonArgs,
        /// Semicolon-separated shapes [default: 32x32x32;64x64x64]
        #[arg(long)]
        shapes: Option<String>,
        /// Semicolon-separated learned ranks [default: 2x2x2;4x2x2;4x4x2;4x4x4]
        #[arg(long)]
        rank_grid: Option<String>,
    },
    /// Run self-check suites (leverage, kronecker, missing, structural or all)
    Verify {
        /// Comma-separated suite names
        #[arg(default_value = "all")]
        suites: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write verify.json into this existing directory
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate { common, name } => commands::cmd_generate(&Settings::resolve(&common)?, &name),
        Command::Decompose { common } => commands::cmd_decompose(&Settings::resolve(&common)?),
        Command::Benchmark { common, shapes, rank_grid } => {
            commands::cmd_benchmark(&Settings::resolve(&common)?, shapes.as_deref(), rank_grid.as_deref())
        }
        Command::Verify { suites, seed, out_dir } => commands::cmd_verify(&suites, seed, out_dir.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
