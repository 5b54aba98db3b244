use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
mod experiment;
mod output;

use commands::{EstimateArgs, GenerateArgs, GraphArgs, InferArgs, IngestArgs, LoglikArgs, RankArgs, StatsArgs};
use error::{CliError, Result};

/// Simulation and inference for latent-attribute network models.
#[derive(Debug, Parser)]
#[command(name = "attrnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample an attribute matrix.
    Generate(GenerateArgs),
    /// Estimate beta and alpha from the growth of a matrix.
    Estimate(EstimateArgs),
    /// Log-likelihood of a matrix under given fitness values and parameters.
    Loglik(LoglikArgs),
    /// Recover fitness values by Monte Carlo coordinate maximization.
    InferFitness(InferArgs),
    /// Rank agreement between true and recovered fitness values.
    RankEval(RankArgs),
    /// Sample a graph from a matrix.
    Graph(GraphArgs),
    /// Degree histogram and distance distribution of an edge list.
    Stats(StatsArgs),
    /// Build a matrix from a document corpus.
    Ingest(IngestArgs),
    /// Run an experiment described by a TOML file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory, overriding the one in the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Validate the config and print the planned jobs without running them.
    #[arg(long)]
    check: bool,
}

fn run(args: &RunArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config).map_err(CliError::io(&args.config))?;
    if args.check {
        let cfg = experiment::ExperimentConfig::parse(&text)?;
        println!("{} cells x {} replicas", cfg.cells().len(), cfg.replicas);
        return Ok(());
    }
    let report = experiment::run(&text, args.output.as_deref())?;
    eprintln!("wrote {} files to {}", report.files, report.output.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => commands::cmd_generate(a),
        Command::Estimate(a) => commands::cmd_estimate(a),
        Command::Loglik(a) => commands::cmd_loglik(a),
        Command::InferFitness(a) => commands::cmd_infer(a),
        Command::RankEval(a) => commands::cmd_rank(a),
        Command::Graph(a) => commands::cmd_graph(a),
        Command::Stats(a) => commands::cmd_stats(a),
        Command::Ingest(a) => commands::cmd_ingest(a),
        Command::Run(a) => run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
