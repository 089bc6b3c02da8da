//! `idr`: corpus to scores to panels to models, one reproducible stage at a time.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BuildMatrixArgs, PanelArgs, RegressArgs, ScoreArgs, SimulateArgs, UsageError, VarianceSplitArgs};
use idr_core::ErrorKind;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "idr", version, about = "Reference-diversity scores, person panels and fixed-effects models")]
struct Cli {
    /// Worker threads for matrix building, scoring and model fitting (default: one per core).
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Co-citation counts and cosine similarity per epoch, plus their sum.
    BuildMatrix(BuildMatrixArgs),
    /// Score every paper against the similarity matrix of the nearest epoch.
    Score(ScoreArgs),
    /// Person, person-year and person-paper tables.
    Panel(PanelArgs),
    /// Fit the model suite to the panel tables.
    Regress(RegressArgs),
    /// Compare citation spread of low- and high-score papers per person.
    VarianceSplit(VarianceSplitArgs),
    /// Generate a synthetic corpus with planted effects.
    Simulate(SimulateArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<idr_core::Error>() {
            return match e.kind() {
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            };
        }
    }
    EXIT_DATA
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(usize::from(n))
            .build_global()?;
    }
    match &cli.command {
        Command::BuildMatrix(a) => commands::build_matrix(a),
        Command::Score(a) => commands::score(a),
        Command::Panel(a) => commands::panel(a),
        Command::Regress(a) => commands::regress(a),
        Command::VarianceSplit(a) => commands::variance_split(a),
        Command::Simulate(a) => commands::simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
