use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::Run;
use config::RunConfig;
use error::CliResult;

/// Simulate, fit and design a 3D cavity wirelessly coupled to an on-chip
/// LC resonator and its mechanical modes. All inputs and outputs in Hz.
#[derive(Parser, Debug)]
#[command(name = "reentrant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (`key = value` lines under `[block]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; overrides the path in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for noise injection and Monte Carlo batches.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Built-in system: 238um, 270um, 300um, 316um, all, design or millikelvin.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write model S21/S11 traces.
    Simulate,
    /// Fit the model to trace files and write a JSON report.
    Fit {
        /// Trace files; replace `traces` from the config when given.
        traces: Vec<PathBuf>,
    },
    /// Tabulate effective rates over a design sweep (CSV).
    Sweep,
    /// Pumped reflection with mechanical modes plus a window report.
    Omit,
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let run = Run {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        preset: cli.preset.clone().or_else(|| config.preset.clone()),
        out: cli.out.clone(),
        inputs: match &cli.command {
            Command::Fit { traces } => traces.clone(),
            _ => Vec::new(),
        },
        config,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&run),
        Command::Fit { .. } => commands::fit(&run),
        Command::Sweep => commands::sweep(&run),
        Command::Omit => commands::omit(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
