//! `owdist`: observable Wasserstein distances from the command line.
//!
//! Exit codes: 0 on success, 2 for malformed input (unreadable files, syntax
//! errors, bad flags), 3 for contract violations (weights not summing to one,
//! atom limits, invalid parameters).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod compute;
mod error;
mod experiment;
mod inputs;
mod voronoi;

use error::CliError;

#[derive(Parser)]
#[command(name = "owdist", version, about = "Observable Wasserstein distances on finite metric spaces")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "OWDIST_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distances between two measures on a stored space.
    Compute(compute::ComputeArgs),
    /// Gaussian classification study.
    GaussianExp(experiment::GaussianArgs),
    /// Heat distributions on random geometric graphs.
    GraphExp(experiment::GraphArgs),
    /// Relative error on spheres.
    SphereExp(experiment::SphereArgs),
    /// Means over seeds for a result CSV.
    Summarize(SummarizeArgs),
    /// Weighted Voronoi cells and values of one observable.
    Voronoi(voronoi::VoronoiArgs),
}

#[derive(Args)]
struct SummarizeArgs {
    /// Result CSV produced by an experiment command.
    #[arg(long)]
    input: PathBuf,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn summarize(args: &SummarizeArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let table = owdist::experiments::ResultTable::parse_csv(&text, &args.input.display().to_string())?;
    inputs::emit(args.out.as_deref(), &owdist::experiments::summary_csv(&table))
}

fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Compute(a) => compute::run(a),
        Command::GaussianExp(a) => experiment::gaussian(a),
        Command::GraphExp(a) => experiment::graph(a),
        Command::SphereExp(a) => experiment::sphere(a),
        Command::Summarize(a) => summarize(a),
        Command::Voronoi(a) => voronoi::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n as usize);
    }
    let result = match builder.build() {
        Ok(pool) => pool.install(|| run(&cli.command)),
        Err(e) => Err(CliError::Contract(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("owdist: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
