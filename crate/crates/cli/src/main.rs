//! `massosc`: detection curves, entanglement traces, feasibility checks and
//! scans, detector event simulation and power estimates from one config file.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error,
//! 3 feasible only within an order of magnitude, 4 infeasible,
//! 5 gravitational shift not resolvable.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "massosc", version, about = "Gravitationally coupled two-mass-state particle pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Joint,
    Marginal,
    ShiftedPair,
}

impl From<Model> for massosc::observables::DoubleHitModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Joint => Self::Joint,
            Model::Marginal => Self::Marginal,
            Model::ShiftedPair => Self::ShiftedPair,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output file; standard output when omitted
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to <out>.manifest.json when --out is given
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Data format; csv by default, json for check and power
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Switch off the gravitational coupling (G = 0)
    #[arg(long)]
    pub no_gravity: bool,
    /// Evaluate on one thread
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detection probabilities against baseline
    Curve {
        #[command(flatten)]
        common: Common,
        /// First baseline (m); defaults to the configured baseline
        #[arg(long, value_name = "DECIMAL")]
        l_min: Option<String>,
        /// Last baseline (m); defaults to ten wavelengths past --l-min
        #[arg(long, value_name = "DECIMAL")]
        l_max: Option<String>,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// Concurrence, negativity and entropy against rest-frame time
    Entangle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DECIMAL", default_value = "0")]
        tau_min: String,
        /// Defaults to the flight time over the configured baseline
        #[arg(long, value_name = "DECIMAL")]
        tau_max: Option<String>,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// Feasibility report for the configured point
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Feasibility over a parameter grid
    Scan {
        #[command(flatten)]
        common: Common,
        /// name:min:max:points[:lin|log], names m1 dm theta d L gamma M R
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
    },
    /// Seeded detector counts per baseline bin
    Events {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Emitted pairs per bin
        #[arg(long, default_value_t = 1_000_000)]
        pairs: u64,
        #[arg(long, default_value_t = 0.5)]
        affected_fraction: f64,
        #[arg(long, value_enum, default_value = "joint")]
        model: Model,
    },
    /// Pairs needed to resolve the gravitational shift
    Power {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Required fraction of rejecting trials
        #[arg(long, default_value_t = 0.9)]
        power: f64,
        /// Measurement baseline (m); defaults to the configured baseline
        #[arg(long, value_name = "DECIMAL")]
        baseline_m: Option<String>,
        #[arg(long, default_value_t = 1 << 48)]
        max_n: u64,
        #[arg(long, value_enum, default_value = "shifted-pair")]
        model: Model,
    },
}

/// A problem with the invocation or the config rather than the computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    use massosc::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(E::Validation(_) | E::Config(_) | E::InvalidInput(_) | E::GridTooLarge { .. }) => 2,
        _ => 1,
    }
}

fn report(err: &anyhow::Error) {
    if let Some(massosc::Error::Validation(list)) = err.downcast_ref::<massosc::Error>() {
        eprintln!("error: invalid config");
        for v in list {
            eprintln!("  {v}");
        }
    } else {
        eprintln!("error: {err:#}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            report(&err);
            ExitCode::from(exit_code_for(&err))
        }
    }
}
