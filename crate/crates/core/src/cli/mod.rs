//! Command-line front end: config loading, the pipeline subcommands and the
//! validation runner.
//!
//! Exit codes: 0 success, 1 validation or computation failure, 2 usage or
//! configuration error.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::angular::AngularError;
use crate::boundstates::BoundStateError;
use crate::exec::ExecMode;
use crate::ofr::OfrError;
use crate::scattering::ScatteringError;
use config::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) | CliError::Failure(_) => 1,
        }
    }
}

impl From<BoundStateError> for CliError {
    fn from(e: BoundStateError) -> Self {
        match e {
            BoundStateError::InfeasibleGrid(_) | BoundStateError::MemoryCap { .. } => CliError::Config(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<ScatteringError> for CliError {
    fn from(e: ScatteringError) -> Self {
        match e {
            ScatteringError::NoRoot { .. } => CliError::Failure(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<OfrError> for CliError {
    fn from(e: OfrError) -> Self {
        match e {
            OfrError::NotExcited => CliError::Failure(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AngularError> for CliError {
    fn from(e: AngularError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "yb-ofr", version, about = "Coupled-channel photoassociation and optical Feshbach resonance engine for 171Yb2")]
pub struct Cli {
    /// TOML run configuration layered over the shipped defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// sequential | parallel
    #[arg(long, global = true)]
    pub exec: Option<ExecMode>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Channel table of one block or of all blocks reachable from a partial wave.
    Channels(ChannelsArgs),
    /// Bound-state table of one or more blocks.
    BoundStates(BoundStatesArgs),
    /// Detuning scan of a_opt, b_opt, K and gate figures for one line.
    Scan(ScanArgs),
    /// √SWAP gate plan for one line.
    Gate(GateArgs),
    /// Oracle and property checks; nonzero exit on any failure.
    Validate(ValidateArgs),
    /// Re-run the ground-potential calibration and print C12.
    Calibrate,
    /// Print the resolved configuration as TOML.
    Config,
}

#[derive(Debug, Args)]
pub struct ChannelsArgs {
    #[arg(long, default_value = "excited")]
    pub manifold: String,
    #[arg(long = "T")]
    pub t: Option<i32>,
    #[arg(long)]
    pub parity: Option<String>,
    /// s or p: list every excited block reachable from that ground partial wave.
    #[arg(long)]
    pub wave: Option<String>,
    /// e (case-(e) labels) or c (case-(c) labels).
    #[arg(long, default_value = "e")]
    pub basis: String,
}

#[derive(Debug, Args)]
pub struct BoundStatesArgs {
    /// s, p, or an explicit block "T,parity" such as "1,odd".
    #[arg(long, default_value = "s")]
    pub block: String,
    /// Binding-energy window "lo:hi" in MHz (default from the config window).
    #[arg(long)]
    pub window: Option<String>,
    /// Directory for per-state wavefunction files (r, u_1 … u_n).
    #[arg(long)]
    pub wavefunctions: Option<PathBuf>,
    /// Intensity for the l_opt column, W/cm².
    #[arg(long)]
    pub intensity: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Binding energy of the line, MHz; the nearest computed s-wave level is used.
    #[arg(long)]
    pub line: f64,
    /// W/cm².
    #[arg(long)]
    pub intensity: f64,
    /// "lo:hi:step" in MHz, measured from the line.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: String,
    /// cm⁻³ (default from the config).
    #[arg(long)]
    pub density: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    #[arg(long, default_value_t = 396.5)]
    pub line: f64,
    /// W/cm²; if omitted the intensity is chosen so that Γ_stim = |Δ|.
    #[arg(long)]
    pub intensity: Option<f64>,
    /// Detuning from the line in MHz.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    /// Detuning in units of Γ_M (used when --detuning is absent).
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_gamma: Option<f64>,
    /// cm⁻³.
    #[arg(long)]
    pub density: Option<f64>,
    /// Target phase, rad.
    #[arg(long)]
    pub phase: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub suite: validate::Suite,
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("yb-ofr: {e}");
            e.exit_code()
        }
    }
}
