use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "tvmg", version, about = "Time-varying mean-group estimation and diagnostics")]
pub struct Cli {
    /// TOML file with one table per subcommand; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean-group coefficient paths with bands and a significance report.
    Tvmg(TvmgArgs),
    /// Time-invariant mean-group OLS.
    StaticOls(StaticArgs),
    /// Leave-one-unit-out bandwidth cross-validation.
    CvBandwidth(CvArgs),
    /// Leave-one-group-out influence diagnostics for one regressor.
    Lofo(LofoArgs),
    /// Before/after coefficient-shift test.
    ShiftTest(ShiftArgs),
    /// Time-varying regression on a single time series.
    AggregateTv(AggregateArgs),
    /// Principal components of a wide table of series.
    Pca(PcaArgs),
    /// Transformation codes and quarterly-to-annual averaging.
    Transform(TransformArgs),
    /// Simulate a random-coefficient panel.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tvmg(_) => "tvmg",
            Command::StaticOls(_) => "static-ols",
            Command::CvBandwidth(_) => "cv-bandwidth",
            Command::Lofo(_) => "lofo",
            Command::ShiftTest(_) => "shift-test",
            Command::AggregateTv(_) => "aggregate-tv",
            Command::Pca(_) => "pca",
            Command::Transform(_) => "transform",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Gaussian,
    Epanechnikov,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandsArg {
    Mbb,
    Normal,
    Both,
}

/// Input columns shared by the panel subcommands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelInput {
    /// Long-format CSV with `unit,group,time` and numeric columns.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Outcome column.
    #[arg(long)]
    pub outcome: Option<String>,
    /// Comma-separated regressor columns (default: every other column).
    #[arg(long, value_delimiter = ',')]
    pub regressors: Option<Vec<String>>,
    /// Directory receiving the output files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Kernel and bandwidth choice.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Smoothing {
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Bandwidth exponent, `H = T^alpha` (default 0.5).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed bandwidth `H`, overriding `alpha`.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Select `alpha` by cross-validation.
    #[arg(long)]
    pub cv: bool,
    /// Comma-separated cross-validation grid (default 0.30, 0.35, ..., 0.85).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TvmgArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: PanelInput,
    #[command(flatten)]
    #[serde(flatten)]
    pub smoothing: Smoothing,
    /// Confidence level of the bands (default 0.90).
    #[arg(long)]
    pub level: Option<f64>,
    /// Drop significance intervals shorter than this many periods (default 1).
    #[arg(long)]
    pub min_duration: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct StaticArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: PanelInput,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: PanelInput,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Comma-separated grid of `alpha` values (default 0.30, 0.35, ..., 0.85).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct LofoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: PanelInput,
    #[command(flatten)]
    #[serde(flatten)]
    pub smoothing: Smoothing,
    /// Regressor to diagnose.
    #[arg(long)]
    pub var: Option<String>,
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: PanelInput,
    /// First period of the post-break regime.
    #[arg(long)]
    pub break_year: Option<i64>,
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregateArgs {
    /// Wide CSV: a time column followed by one column per series.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Comma-separated regressor columns (may be empty for intercept only).
    #[arg(long, value_delimiter = ',')]
    pub regressors: Option<Vec<String>>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum)]
    pub bands: Option<BandsArg>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Bootstrap replications (at least 100).
    #[arg(long)]
    pub replications: Option<usize>,
    /// Block-length scale `c` in `floor(c T^(1/3))` (default 1).
    #[arg(long)]
    pub block_scale: Option<f64>,
    /// Fixed block length, overriding `block_scale`.
    #[arg(long)]
    pub block_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PcaArgs {
    /// Wide CSV: a time label column followed by one column per series.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Transformation codes; when given, the input is treated as quarterly and
    /// transformed and annualized first.
    #[arg(long)]
    pub tcodes: Option<PathBuf>,
    /// Number of components (default 1).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub start_year: Option<i64>,
    #[arg(long)]
    pub end_year: Option<i64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformArgs {
    /// Quarterly wide CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// CSV with `series,tcode` rows.
    #[arg(long)]
    pub tcodes: Option<PathBuf>,
    #[arg(long)]
    pub start_year: Option<i64>,
    #[arg(long)]
    pub end_year: Option<i64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    /// TOML description of the panel design.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
