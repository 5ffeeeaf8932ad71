//! `rase`: screen CSV data, generate benchmark datasets and run replication
//! studies.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage or
//! configuration errors.

mod bench;
mod manifest;
mod screen;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rase", version, about = "Random subspace ensemble variable screening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the features of a CSV dataset.
    Screen(screen::Args),
    /// Write a synthetic benchmark dataset and its metadata.
    Simulate(simulate::Args),
    /// Run a replication study described by a JSON config.
    Bench(bench::Args),
}

/// A failure and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn missing(flag: &str) -> Self {
        Self::usage(format!("missing required flag: {flag}"))
    }
}

impl From<rase::Error> for Failure {
    fn from(e: rase::Error) -> Self {
        use rase::Error as E;
        let code = match e {
            E::InvalidParameter { .. } | E::UnsupportedCriterion { .. } | E::Config { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    let outcome = match cli.command {
        Command::Screen(args) => screen::run(args, argv),
        Command::Simulate(args) => simulate::run(args, argv),
        Command::Bench(args) => bench::run(args, argv),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
