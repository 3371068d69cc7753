//! `routing-aos` command-line front end.

mod config;
mod eval;
mod gen;
mod meta;
mod parse;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use routing_aos::agent::{AgentError, SampleMode};
use routing_aos::dataset::DatasetError;
use routing_aos::encoder::CheckpointError;
use routing_aos::vrp::ParseError;

use crate::config::ConfigError;

#[derive(Parser)]
#[command(name = "routing-aos", about = "Learned operator selection for CVRP neighborhood search")]
#[command(disable_version_flag = true, arg_required_else_help = true)]
struct Cli {
    /// Print artifact and checkpoint-format versions.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of random instances as JSON lines.
    Gen(GenArgs),
    /// Train an operator-selection policy.
    Train(TrainArgs),
    /// Evaluate a policy on a dataset or benchmark file.
    Eval(EvalArgs),
    /// Convert a CVRPLib file to instance JSON.
    Parse(ParseArgs),
}

#[derive(Args)]
pub struct GenArgs {
    /// Customers per instance.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Vehicle capacity; derived from `--n` when absent.
    #[arg(long)]
    pub capacity: Option<u32>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// TOML run configuration; defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_checkpoint: PathBuf,
    /// JSONL training log.
    #[arg(long)]
    pub log: PathBuf,
    /// Overrides `train.policy`.
    #[arg(long)]
    pub policy: Option<String>,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `train.episodes`.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Overrides `search.steps`.
    #[arg(long = "T")]
    pub steps: Option<usize>,
    /// Overrides `instances.customers`.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Trained model; its stored config supplies encoder and operators.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// TOML run configuration; overrides the checkpoint's stored config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSONL dataset or a CVRPLib `.vrp` file.
    #[arg(long)]
    pub data: PathBuf,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON; `<out>.summary.json` when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Overrides `search.steps`.
    #[arg(long = "T")]
    pub steps: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub mode: Option<SampleMode>,
    /// Reference costs: CSV `instance_id,cost` or a JSON object.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Policy to evaluate.
    #[arg(long, default_value = "gama")]
    pub policy: String,
    /// A second policy run on the same instances and seeds.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Fill `time_ms` with measured wall time.
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Args)]
pub struct ParseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Process exit code for an error, from the first recognised cause.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<CheckpointError>() {
            return 3;
        }
        if cause.is::<ParseError>() || cause.is::<parse::InputError>() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<AgentError>() {
            match e {
                AgentError::Config(_) => return 2,
                AgentError::Checkpoint(_) => return 3,
                _ => {}
            }
        }
        if let Some(DatasetError::Parse { .. }) = cause.downcast_ref::<DatasetError>() {
            return 4;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        println!("{}", meta::version_line());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see --help");
        return ExitCode::from(2);
    };
    let result = match command {
        Command::Gen(a) => gen::run(&a),
        Command::Train(a) => train::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Parse(a) => parse::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
