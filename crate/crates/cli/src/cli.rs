use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use herdsim_core::ingest::DEFAULT_TAU_WEEKS;
use herdsim_core::sim::{DEFAULT_K, ModelKind};
use herdsim_core::stats::DEFAULT_TAIL_FRACTION;

pub const OUT_ROOT_ENV: &str = "HERDSIM_OUT_ROOT";

const AFTER_HELP: &str = "\
Input schemas (headered CSV, ISO-8601 dates, decimal numbers):
  index.csv    date,close,volume
  panel.csv    date,TICKER1,...,TICKERn   (simulation panels use `day` step labels)
  sectors.csv  ticker,sector_id
  search.csv   week_start,ticker,volume
  returns.csv  date|day,return[,...]     (only the first two columns are read)

Every output directory receives a manifest.json with the command line, config
hash, seed, timestamp, tool version and SHA-256 digests of inputs and outputs.
Without --out, results go under $HERDSIM_OUT_ROOT (default `runs`).

Exit codes: 0 success, 1 numeric or runtime failure, 2 input or validation failure.";

#[derive(Debug, Parser)]
#[command(
    name = "herdsim",
    version,
    about = "Calibrate, simulate and analyze agent-based herding market models",
    after_help = AFTER_HELP
)]
pub struct Cli {
    /// Root for default output directories.
    #[arg(long, global = true, env = OUT_ROOT_ENV, default_value = "runs", value_name = "DIR")]
    pub out_root: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate model parameters from market data.
    #[command(subcommand)]
    Calibrate(CalibrateCommand),
    /// Run a market model and write its returns and diagnostics.
    Simulate(SimulateArgs),
    /// Compute statistics, correlation curves or spectra of returns.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Chain calibrate, simulate and analyze steps described in a TOML file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
pub enum CalibrateCommand {
    /// Bull/bear trading asymmetry (alpha, beta) and herding shift (delta_r, delta_R) of an index.
    Asymmetry(AsymmetryArgs),
    /// Market and sector co-movement degrees H_M and H_j of a returns panel.
    Comovement(ComovementArgs),
    /// Information driving forces from weekly search and trading volumes.
    Infoforce(InfoforceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AsymmetryArgs {
    /// Index CSV (date,close,volume).
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Maximum investment horizon M used for the weighted return.
    #[arg(long, default_value_t = 150)]
    pub max_horizon: usize,
    /// Weighted-return coefficient.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: f64,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ComovementArgs {
    /// Returns panel CSV (date,TICKER1,...).
    #[arg(long, value_name = "FILE")]
    pub panel: PathBuf,
    /// Sector map CSV (ticker,sector_id).
    #[arg(long, value_name = "FILE")]
    pub sectors: PathBuf,
    /// Fill gaps of at most two missing cells with zero returns.
    #[arg(long)]
    pub forward_fill: bool,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InfoforceArgs {
    /// Weekly search volumes (week_start,ticker,volume).
    #[arg(long, value_name = "FILE")]
    pub search: PathBuf,
    /// Weekly trading volumes in the same schema as the search file.
    #[arg(long, value_name = "FILE")]
    pub volumes: PathBuf,
    /// Weekly market returns (date,return) for the bull/bear force asymmetry.
    #[arg(long, value_name = "FILE")]
    pub market: Option<PathBuf>,
    /// Correlating time in weeks.
    #[arg(long, conflicts_with = "tau_curve")]
    pub tau: Option<usize>,
    /// Curve CSV (lag,value) from which the correlating time is detected.
    #[arg(long, value_name = "FILE")]
    pub tau_curve: Option<PathBuf>,
    /// Minimum number of common weeks per ticker.
    #[arg(long, default_value_t = 2 * DEFAULT_TAU_WEEKS)]
    pub min_weeks: usize,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Model to run.
    #[arg(value_parser = parse_model)]
    pub model: ModelKind,
    /// Model configuration TOML; unset fields keep their defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Calibration report JSON applied on top of the configuration.
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
    /// Seed; with --ensemble, the first of K consecutive seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of ensemble members, each written to its own seed directory.
    #[arg(long, value_name = "K")]
    pub ensemble: Option<usize>,
    /// Worker threads for ensembles (0 = all cores).
    #[arg(long, value_name = "J", default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: herdsim_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Hurst exponent, tail exponent, kurtosis and volatility autocorrelation A(t).
    Stats(SeriesArgs),
    /// Return-volatility correlation L(t) with an exponential fit.
    Lcurve(SeriesArgs),
    /// Eigenvalues and leading eigenvectors of a panel's cross-correlation matrix.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    /// Returns CSV; repeat for an ensemble, which is averaged in the given order.
    #[arg(long = "in", value_name = "FILE", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Largest lag of the correlation curve [default: 50 for stats, 40 for lcurve].
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Fraction of largest |r| used by the Hill estimator.
    #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
    pub tail_fraction: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    /// Returns panel CSV.
    #[arg(long, value_name = "FILE")]
    pub panel: PathBuf,
    /// Sector map CSV.
    #[arg(long, value_name = "FILE")]
    pub sectors: PathBuf,
    /// Number of leading eigenvectors exported.
    #[arg(long, default_value_t = 3)]
    pub leading: usize,
    #[arg(long)]
    pub forward_fill: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Pipeline TOML; relative paths inside it resolve against its directory.
    #[arg(value_name = "FILE")]
    pub file: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
