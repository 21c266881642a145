mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ringgather_core::SchedulerPolicy;

/// Gathering of anonymous oblivious robots on a ring.
#[derive(Parser)]
#[command(name = "ringgather", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one execution (or one per canonical initial) and report the outcome.
    Simulate(SimulateArgs),
    /// Model-check every canonical initial configuration of (n, k).
    Check(CheckArgs),
    /// Run the second-phase transition suite.
    Lemmas(LemmasArgs),
    /// List canonical initial configurations of (n, k).
    Enumerate(EnumerateArgs),
    /// Batches of randomized runs and the fitted growth exponent.
    Stats(StatsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Occupied nodes like `0,1,2,5,7` (towers as `node*count`),
    /// `random:SEED`, or `enumerate`.
    #[arg(long)]
    initial: String,
    #[arg(long, default_value = "round_robin")]
    scheduler: SchedulerPolicy,
    /// Every robot completes a cycle within every window of F steps. Defaults to 3k.
    #[arg(long = "fairness")]
    fairness: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to 10·n².
    #[arg(long)]
    round_limit: Option<u64>,
    /// Trace output, one JSON event per line.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON summary output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Accepted for symmetry with `simulate`. Exploration covers every
    /// weakly fair schedule, which includes every F-bounded one.
    #[arg(long = "fairness")]
    fairness: Option<u64>,
    #[arg(long)]
    round_limit: Option<u64>,
    #[arg(long, default_value_t = 40_000_000)]
    max_states: usize,
    /// Counterexample traces are written as `<trace>.<i>.jsonl`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct LemmasArgs {
    /// Largest team size; each instance uses n = k + 5.
    #[arg(long, default_value_t = 9)]
    k_max: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    /// Defaults to 3k.
    #[arg(long = "fairness")]
    fairness: Option<u64>,
    /// Plot-ready CSV output.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Why a command failed, mapped onto the exit status.
enum Failure {
    /// A property did not hold: status 1.
    Property(String),
    /// The request itself was invalid: status 2.
    Usage(String),
    /// Writing output failed: status 1.
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Check(a) => commands::check(a),
        Command::Lemmas(a) => commands::lemmas(a),
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Stats(a) => commands::stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
