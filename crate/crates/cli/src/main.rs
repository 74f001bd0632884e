//! `ctorsion`: command-line front end for the circle-torsion library.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

/// Version of the report layout written by every command.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "ctorsion", version, about = "Exact arithmetic for characterized subgroups of the circle group")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct WindowArgs {
    /// Last index of the evaluation window.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// First index of the evaluation window (default: horizon / 2).
    #[arg(long)]
    pub window: Option<u64>,
    /// Tolerance for limit claims, as `p/q` (default 1/64).
    #[arg(long)]
    pub tolerance: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the flattened sequence e_1, e_2, ... one term per line.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: u64,
    },
    /// Mixed-radix digits of a rational point.
    Digits {
        /// The point, as `p/q`.
        x: String,
        #[arg(long)]
        spec: PathBuf,
        /// Number of digits to compute before looking for a tail.
        #[arg(long, default_value_t = 20)]
        count: u64,
    },
    /// Decide whether a rational point lies in the characterized subgroup.
    Member {
        x: String,
        #[arg(long)]
        spec: PathBuf,
        /// Maximum number of blocks to scan.
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
    },
    /// Evaluate the digit conditions for one index set or the generated family.
    Conditions {
        /// A rational point; without it the digits come from the spec file.
        x: Option<String>,
        #[arg(long)]
        spec: PathBuf,
        /// Index set (`all`, `squares`, `powers b`, `residue m r`, `explicit ...`).
        #[arg(long)]
        set: Option<String>,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Fold the digits in the spec file into a convergent witness.
    Witness {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Adversarial multiplier certificate for a digit c over ratio q.
    Certificate {
        c: u64,
        q: u64,
        /// Restrict to one case (1a, 1b, 2a, 2b).
        #[arg(long)]
        case: Option<String>,
    },
    /// Run a verification suite (or `all`).
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        scale: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = commands::run(&cli.command, cli.format);
    eprintln!("wall time: {:.3?}", started.elapsed());
    match outcome {
        Ok(report) => {
            print!("{}", report.body);
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
