//! `conngraph`: sample connected Waxman and GER graphs and study how the
//! sampler converges.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 runtime failure,
//! 3 validation failed.

mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "conngraph", version, about = "Sample connected spatial random graphs by Metropolis-Hastings")]
struct Cli {
    /// Worker threads for parallel jobs (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write connected graphs sampled after burn-in, with thinning.
    Generate(commands::generate::GenerateArgs),
    /// Run one chain and record summary statistics along the way.
    Chain(commands::chain::ChainArgs),
    /// Fit convergence curves to trace files and recommend a burn-in.
    Diagnose(commands::diagnose::DiagnoseArgs),
    /// Fraction of connected unconditioned graphs over a (q, s) grid.
    Sweep(commands::sweep::SweepArgs),
    /// How iterations to convergence grow with the number of nodes.
    Scaling(commands::scaling::ScalingArgs),
    /// Compare the sampler with exact enumeration on a tiny graph.
    Validate(commands::validate::ValidateArgs),
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
    Validation(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Failure::Runtime(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Validation(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::runtime(e.to_string()))?;
    }
    let quiet = cli.quiet;
    match cli.command {
        Command::Generate(args) => commands::generate::run(args, quiet),
        Command::Chain(args) => commands::chain::run(args, quiet),
        Command::Diagnose(args) => commands::diagnose::run(args, quiet),
        Command::Sweep(args) => commands::sweep::run(args, quiet),
        Command::Scaling(args) => commands::scaling::run(args, quiet),
        Command::Validate(args) => commands::validate::run(args, quiet),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
