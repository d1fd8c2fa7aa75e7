//! `rtdiff`: autocorrelation and diffraction of return time combs from a JSON
//! configuration, written as CSV.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{Command, RunError};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "rtdiff",
    version,
    about = "Autocorrelation and diffraction of return time combs"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for typical reference points; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::load(&cli.config)
        .map_err(RunError::from)
        .and_then(|cfg| commands::run(cli.command, cfg, &cli.out, cli.seed));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rtdiff: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
