//! Config-driven command-line front end: phase diagrams, multicritical
//! location, gap scans, exponent fits, quench collapses and the ion
//! bridge, each emitting plot-ready CSV/JSON plus a manifest that pins the
//! config hash and per-output checksums. Serial reruns are bit-exact;
//! parallel runs only change scheduling, never values or row order.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

/// Exit codes: 0 success, 1 I/O or verification failure, 2 config error,
/// 3 numeric non-convergence.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl From<multicrit::Error> for CliError {
    fn from(e: multicrit::Error) -> Self {
        match e {
            multicrit::Error::InvalidParams(m) => CliError::Config(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "multicrit", version, about = "biased multi-subset qubit-boson model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Force single-threaded execution (bit-exact reruns).
    #[arg(long, global = true)]
    pub serial: bool,
    /// Override the command's primary tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mean-field phase diagram over a parameter grid, with first-order
    /// boundary detection along the primary axis.
    PhaseDiagram,
    /// Locate an (M+2)-order multicritical point.
    Locate,
    /// Excitation gap versus frequency ratio with a finite-frequency
    /// scaling fit.
    GapScan,
    /// Mean-field critical-exponent fits at a located multicritical point.
    Exponents,
    /// Quench sweep, rescaled collapse curves and spread metrics.
    QuenchCollapse,
    /// Trapped-ion parameter mapping and feasibility report.
    Ion,
    /// Re-check the checksums recorded in an output directory's manifest.
    Verify,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if !matches!(cli.command, Command::Verify) {
        init_pool(cli)?;
        std::fs::create_dir_all(&cli.out)?;
    }
    match cli.command {
        Command::PhaseDiagram => commands::phase_diagram::run(cli),
        Command::Locate => commands::locate::run(cli),
        Command::GapScan => commands::gap_scan::run(cli),
        Command::Exponents => commands::exponents::run(cli),
        Command::QuenchCollapse => commands::quench_collapse::run(cli),
        Command::Ion => commands::ion::run(cli),
        Command::Verify => manifest::verify_dir(&cli.out),
    }
}

fn init_pool(cli: &Cli) -> CliResult<()> {
    let threads = if cli.serial { 1 } else { cli.jobs.unwrap_or(0) };
    // a later duplicate build (tests call run() repeatedly) is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
