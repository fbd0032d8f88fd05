//! `ptune`: run tuning jobs and traces on the simulated cluster, manage the
//! ground-truth model, and export report tables.

mod bench;
mod groundtruth;
mod output;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ptune_core::orchestrator::Mode;

/// Exit status for runtime failures.
const EXIT_FAILURE: u8 = 1;
/// Exit status for bad flags or unreadable inputs.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "ptune", version, about = "Pipelined hyperparameter and system-parameter tuning on a simulated cluster")]
struct Cli {
    /// Directory holding the metric store and the ground-truth model.
    #[arg(long, global = true, env = "PTUNE_DATA_DIR", default_value = "ptune-data")]
    data_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    V1,
    V2,
    Pipetune,
    All,
}

impl ModeArg {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::V1 => vec![Mode::V1],
            ModeArg::V2 => vec![Mode::V2],
            ModeArg::Pipetune => vec![Mode::PipeTune],
            ModeArg::All => Mode::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one tuning job and write summary.csv and epochs.csv.
    Run(run::RunArgs),
    /// Run a multi-tenant arrival trace and report response times.
    Bench(bench::BenchArgs),
    /// Fit, inspect or evaluate the ground-truth model.
    #[command(subcommand)]
    Groundtruth(groundtruth::GroundTruthCommand),
    /// Export plot-ready CSV tables from recorded runs.
    Report(report::ReportArgs),
}

/// A failure with the exit status it maps to.
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<ptune_core::Error> for CliError {
    fn from(e: ptune_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Fails with a usage error unless `path` exists.
pub fn require_file(path: &std::path::Path, what: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(anyhow::anyhow!("{what} not found: {}", path.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::run(&cli.data_dir, args),
        Command::Bench(args) => bench::run(&cli.data_dir, args),
        Command::Groundtruth(cmd) => groundtruth::run(&cli.data_dir, cmd),
        Command::Report(args) => report::run(&cli.data_dir, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
