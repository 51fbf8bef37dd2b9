use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ensemble_core::cli::{error_exit_code, run, EXIT_CONFIG};
use ensemble_core::config::{load_config, parse_config, Mode, RunConfig};
use ensemble_core::io::SnapshotFormat;
use ensemble_core::Result;

/// Hamiltonian ensemble dynamics: simulations, solver comparisons and axiom checks.
#[derive(Parser)]
#[command(name = "ensemble", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario with the hydrodynamic solver.
    Simulate(RunArgs),
    /// Evolve with both solvers and tabulate their discrepancy.
    Compare(RunArgs),
    /// Run the axiom check suite.
    VerifyAxioms(RunArgs),
    /// Print the preset scenario names.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot format, overriding `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

fn configure(mode: Mode, args: Option<RunArgs>) -> Result<RunConfig> {
    let Some(args) = args else {
        let mut c = parse_config("")?;
        c.mode = mode;
        return Ok(c);
    };
    let mut c = match &args.config {
        Some(path) => load_config(path)?,
        None => parse_config("")?,
    };
    c.mode = mode;
    if let Some(out) = args.out {
        c.output_dir = out;
    }
    if let Some(seed) = args.seed {
        c.seed = seed;
    }
    if let Some(format) = args.format {
        c.format = match format {
            Format::Csv => SnapshotFormat::Csv,
            Format::Bin => SnapshotFormat::Bin,
        };
    }
    if mode.needs_scenario() {
        c.job()?;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, Some(a)),
        Command::Compare(a) => (Mode::Compare, Some(a)),
        Command::VerifyAxioms(a) => (Mode::VerifyAxioms, Some(a)),
        Command::ListScenarios => (Mode::ListScenarios, None),
    };
    let result = configure(mode, args).and_then(|c| run(&c));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("ensemble: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
