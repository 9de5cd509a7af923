//! `foldkit`: fit, simulate, benchmark and classify with dimension folding.

mod commands;
mod config;
mod dataset;
mod error;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BenchArgs, ClassifyArgs, FitArgs, SimulateArgs};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "foldkit", version, about = "Sufficient dimension folding for matrix-valued predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a folded (or unfolded) estimator and report bases and reduced predictors.
    Fit(FitArgs),
    /// Draw a data set from one of the two mixture models.
    Simulate(SimulateArgs),
    /// Run the Monte-Carlo comparison tables.
    Bench(BenchArgs),
    /// Leave-one-out QDA accuracy after screening and reduction.
    Classify(ClassifyArgs),
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Bench(args) => commands::bench(args),
        Command::Classify(args) => commands::classify(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
