//! Batch front-end for code search, extraction sweeps, calibration and LUT
//! scoring. Every artifact is plain JSON or CSV; see `schema/csv_columns.md`.

mod calibrate;
mod codes;
mod extract;
mod output;
mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use comet_core::{ArrayConfig, CodeSet, CometError};
use thiserror::Error;

pub use calibrate::{cmd_calibrate, CalibrateOutcome};
pub use codes::{cmd_codes, CodesOutcome};
pub use extract::{cmd_extract, ExtractOutcome, ExtractionRow, ExtractionSummary, ErrorStats};
pub use report::{cmd_report, ReportOutcome};

/// Default output directory when neither `--out` nor `COMET_OUT_DIR` is set.
pub const DEFAULT_OUT_DIR: &str = "comet-out";

#[derive(Debug, Parser)]
#[command(name = "comet", version, about = "Code-modulated embedded test for phased arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for and verify an orthogonal-code-product set.
    Codes(CodesArgs),
    /// Extract every phase state of the ideal-interpolator LUT and compare with the oracle.
    Extract(ExtractArgs),
    /// Closed-loop LUT calibration.
    Calibrate(CalibrateArgs),
    /// Score an existing LUT against a scenario's oracle.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long, env = "COMET_OUT_DIR", default_value = DEFAULT_OUT_DIR)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CodesArgs {
    /// Code length (power of two).
    #[arg(long, default_value_t = 256)]
    pub length: usize,
    /// Number of array elements; each uses two channels. Defaults to the
    /// scenario's element count, or 8.
    #[arg(long)]
    pub elements: Option<usize>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Auto,
    Normal,
    Rotated,
}

impl From<AxisArg> for comet_core::AxisOverride {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Auto => Self::Auto,
            AxisArg::Normal => Self::Normal,
            AxisArg::Rotated => Self::Rotated,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Code-set JSON from `comet codes`; searched afresh when omitted.
    #[arg(long)]
    pub codes: Option<PathBuf>,
    /// Code length used when no code file is given.
    #[arg(long, default_value_t = 256)]
    pub length: usize,
    /// Phase resolution in bits; the LUT has 2^bits states.
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u32).range(2..=8))]
    pub bits: u32,
    /// Root seed; overrides the scenario's seed. Trial `t` uses `seed + t`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Detector noise sigma override (fraction of ADC full scale).
    #[arg(long)]
    pub noise: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 1)]
    pub trials: u32,
    #[arg(long, value_enum, default_value_t = AxisArg::Auto)]
    pub axis: AxisArg,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Target amplitude as a fraction of the weakest element's full scale.
    #[arg(long, default_value_t = 0.9)]
    pub target_fraction: f64,
    #[arg(long, default_value_t = 25)]
    pub max_iterations: usize,
    /// Seconds per frame, for the time budget.
    #[arg(long, default_value_t = 0.01)]
    pub t_frame: f64,
    /// Also write the per-element accepted-EVM trace.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub lut: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Comet(#[from] CometError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2: invalid input, 3: infeasible code set, 4: solver or backend failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Comet(CometError::NoValidCodeSet { .. }) => 3,
            CliError::Comet(CometError::SolverFailed { .. } | CometError::Backend { .. }) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn load_scenario(path: &Path) -> CliResult<ArrayConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(ArrayConfig::from_json(&text)?)
}

pub(crate) fn load_codes(args: &PipelineArgs, n_elements: usize) -> CliResult<CodeSet> {
    let set = match &args.codes {
        Some(path) => CodeSet::from_json(&std::fs::read_to_string(path).map_err(io_err(path))?)?,
        None => comet_core::select_ocp_set(args.length, 2 * n_elements)?,
    };
    if set.channels() != 2 * n_elements {
        return Err(CliError::Usage(format!(
            "code set has {} channels but the scenario needs {}",
            set.channels(),
            2 * n_elements
        )));
    }
    Ok(set)
}

/// Scenario with the command-line seed and noise overrides applied.
pub(crate) fn prepared_scenario(args: &PipelineArgs) -> CliResult<ArrayConfig> {
    let mut cfg = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    if let Some(noise) = args.noise {
        cfg.noise_sigma = noise;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run one parsed command, writing its artifacts; returns the lines to print.
pub fn run(cli: &Cli) -> CliResult<Vec<String>> {
    match &cli.command {
        Command::Codes(a) => cmd_codes(a).map(|o| o.log),
        Command::Extract(a) => cmd_extract(a).map(|o| o.log),
        Command::Calibrate(a) => cmd_calibrate(a).map(|o| o.log),
        Command::Report(a) => cmd_report(a).map(|o| o.log),
    }
}
