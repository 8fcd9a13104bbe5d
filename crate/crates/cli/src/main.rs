//! `dpsnn`: run, calibrate and report on the spiking network benchmark.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input.

mod commands;
mod platform;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dpsnn", version, about = "Distributed spiking network benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the network, simulate it and write raster, metrics and energy report.
    Run(RunArgs),
    /// Energy report or two-platform comparison from measured inputs.
    Report(ReportArgs),
    /// Tune the excitatory weight scale onto the target rate and write a derived config.
    Calibrate(CalibrateArgs),
}

/// Options shared by commands that load a run config.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Config file; the built-in desk-scale defaults apply to missing keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set sim.seconds=1` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Number of ranks (`sim.ranks`).
    #[arg(long)]
    pub ranks: Option<usize>,
    /// Seed for both the network and the stimulus.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (`output.dir`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Run only this rank of a multi-host job; needs `--cluster`.
    #[arg(long, requires = "cluster")]
    pub rank: Option<usize>,
    /// Cluster file with one `rank host:port` line per rank.
    #[arg(long, value_name = "PATH", requires = "rank")]
    pub cluster: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Platform record: `label=L,voltage=V,current=A[,current_error=A][,baseline=W],seconds=S,events=N`.
    /// `metrics=PATH` takes seconds and events from a metrics file.
    #[arg(long, value_name = "SPEC")]
    pub platform: Vec<String>,
    /// Metrics file of a run made with power inputs.
    #[arg(long, value_name = "PATH")]
    pub metrics: Vec<PathBuf>,
    /// Also write the report as key-value text into this directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Target mean rate (`calibration.target_hz`).
    #[arg(long)]
    pub target_hz: Option<f64>,
    /// Where to write the derived config (default `<out>/calibrated.cfg`).
    #[arg(long, value_name = "PATH")]
    pub write: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Report(a) => commands::report(a),
        Command::Calibrate(a) => commands::calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
