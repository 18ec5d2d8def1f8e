//! `haarfact`: builds operator-adapted faithful Haar systems, runs the
//! factorizations, and prints diagnostics tables.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 builder failure,
//! 3 missing large diagonal, 4 refused request. Every invocation ends with a
//! single `key=value` status line on stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Parser)]
#[command(name = "haarfact", version, about = "Faithful Haar systems adapted to operators with a large diagonal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a faithful Haar system adapted to an operator; writes system.json, certificates.csv, run.json
    FhsBuild(RunArgs),
    /// Build, then assemble A, B, D and certify ‖D − BTA‖
    Factorize(RunArgs),
    /// Factor the identity through the operator after the sign flip
    FactorIdentity(RunArgs),
    /// Norm of a step function stored as JSON
    Norm(NormArgs),
    #[command(subcommand)]
    Diagnose(Diagnose),
    #[command(subcommand)]
    Zoo(ZooCommand),
}

/// Run parameters; each flag overrides the config key of the same name.
#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "haarfact-out")]
    pub out: PathBuf,
    /// Norm descriptor, e.g. `lp:p=2` or `lorentz:p=2,q=1`
    #[arg(long)]
    pub space: Option<String>,
    /// Zoo descriptor, e.g. `identity-noise:eps=0.02`
    #[arg(long)]
    pub operator: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub resolution: Option<u32>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Random probes for the probe estimates
    #[arg(long, default_value_t = 64)]
    pub probes: usize,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    #[arg(long, default_value = "lp:p=2")]
    pub space: String,
    /// Print the Köthe dual norm as well
    #[arg(long)]
    pub dual: bool,
    /// JSON file `{"resolution": N, "values": [...]}`
    pub input: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Diagnose {
    /// |⟨1_A r_n^θ, g⟩| per level n, as CSV
    Decay {
        #[arg(long, default_value_t = 10)]
        resolution: u32,
        /// Take g = h_J
        #[arg(long, conflicts_with = "input")]
        haar: Option<u64>,
        /// Take g from a step-function JSON file; default is a seeded random g
        #[arg(long)]
        input: Option<PathBuf>,
        /// A as `level:offset` intervals (offsets from 1), comma separated
        #[arg(long, default_value = "0:1")]
        set: String,
        #[arg(long)]
        from: Option<u32>,
        #[arg(long)]
        to: Option<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest norm of a convex combination of r_from..r_to
    WeakNull {
        #[arg(long, default_value = "lp:p=2")]
        space: String,
        #[arg(long, default_value_t = 1)]
        from: u32,
        #[arg(long, default_value_t = 8)]
        to: u32,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sandwich and monotone partial-sum checks on random functions
    Sandwich {
        #[arg(long, default_value = "lp:p=2")]
        space: String,
        #[arg(long, default_value_t = 10)]
        resolution: u32,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum ZooCommand {
    /// List the operator catalogue
    List,
    /// Write a zoo operator as a binary dense dump
    Dump {
        #[arg(long)]
        operator: String,
        #[arg(long, default_value_t = 8)]
        resolution: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code != 0 {
                eprintln!("haarfact: status=usage exit=1");
            }
            return ExitCode::from(code);
        }
    };
    let (name, result) = match cli.command {
        Command::FhsBuild(args) => ("fhs-build", commands::fhs_build(&args)),
        Command::Factorize(args) => ("factorize", commands::factorize(&args)),
        Command::FactorIdentity(args) => ("factor-identity", commands::factor_identity(&args)),
        Command::Norm(args) => ("norm", commands::norm(&args)),
        Command::Diagnose(d) => ("diagnose", commands::diagnose(&d)),
        Command::Zoo(z) => ("zoo", commands::zoo(&z)),
    };
    match result {
        Ok(summary) => {
            eprintln!("haarfact: status=ok exit=0 command={name}{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure { code, status, reason }) => {
            eprintln!("haarfact: status={status} exit={code} command={name} reason={reason:?}");
            ExitCode::from(code)
        }
    }
}
