use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::plot::PlotKind;

/// Stochastic error calibration of inertial sensors with wavelet variances.
#[derive(Debug, Parser)]
#[command(name = "gmwm", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed of every random stream
    #[arg(long, global = true, help_heading = "Global options", value_name = "N")]
    pub seed: Option<u64>,

    /// Sampling frequency in Hz (inferred from the data when absent)
    #[arg(long, global = true, help_heading = "Global options", value_name = "HZ")]
    pub freq: Option<f64>,

    /// Use the robust wavelet variance
    #[arg(long, global = true, help_heading = "Global options")]
    pub robust: bool,

    /// Efficiency of the robust estimator, in (0.5, 1]
    #[arg(long, global = true, help_heading = "Global options", value_name = "E")]
    pub eff: Option<f64>,

    /// Write JSON documents instead of CSV and report errors as JSON on stderr
    #[arg(long, global = true, help_heading = "Global options")]
    pub json: bool,

    /// Worker threads; results do not depend on it
    #[arg(long, global = true, help_heading = "Global options", value_name = "N")]
    pub threads: Option<usize>,

    /// TOML file with default settings; flags win
    #[arg(long, global = true, help_heading = "Global options", value_name = "PATH", env = "GMWM_CONFIG")]
    pub config: Option<PathBuf>,

    /// JSON file of binary IMU schemas added to the built-in registry
    #[arg(long, global = true, help_heading = "Global options", value_name = "PATH")]
    pub schemas: Option<PathBuf>,

    /// Output file (stdout when absent or `-`)
    #[arg(short, long, global = true, help_heading = "Global options", value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a binary log or text table and write it as CSV
    Import(ImportArgs),
    /// Wavelet variance with confidence intervals
    Wvar(WvarArgs),
    /// Allan variance
    Avar(ClusterArgs),
    /// Hadamard variance
    Hvar(ClusterArgs),
    /// Fit a latent model by the GMWM
    Fit(FitArgs),
    /// Rank candidate models by the wavelet information criterion
    Rank(RankArgs),
    /// Rank every sub-model of a full model, channel by channel
    Auto(AutoArgs),
    /// Compare the classical and robust wavelet variances
    Compare(CompareArgs),
    /// Simulate a latent model with given parameter values
    Simulate(SimulateArgs),
    /// Redraw a plot from its companion CSV
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input file; stdin when absent or `-`
    #[arg(short, long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Read a binary log with this registered schema (e.g. IMAR)
    #[arg(long, value_name = "NAME")]
    pub imu_type: Option<String>,

    /// Field delimiter of text input: a single character or `tab`
    #[arg(long, value_name = "CHAR")]
    pub delimiter: Option<String>,

    /// The first row holds column names
    #[arg(long, conflicts_with = "no_header")]
    pub header: bool,

    /// The first row holds data
    #[arg(long)]
    pub no_header: bool,

    /// 1-based gyroscope columns, mapped to X, Y, Z in order
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub gyro_cols: Vec<usize>,

    /// 1-based accelerometer columns, mapped to X, Y, Z in order
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub accel_cols: Vec<usize>,

    /// 1-based time column
    #[arg(long, value_name = "N")]
    pub time_col: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArg {
    /// Channel to analyse: `gyro:Y`, `accel:x` or a 1-based index
    #[arg(short, long, value_name = "SEL")]
    pub channel: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotOut {
    /// Write an SVG plot here, with its data in a CSV of the same stem
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,

    /// Plot title
    #[arg(long, value_name = "TEXT")]
    pub title: Option<String>,

    /// Leave out the confidence ribbons
    #[arg(long)]
    pub no_ci: bool,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Modwt,
    Dwt,
}

#[derive(Debug, Args)]
pub struct WvarArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub plot: PlotOut,

    /// Number of scales (default floor(log2 T) - 1)
    #[arg(long, value_name = "J")]
    pub levels: Option<usize>,

    /// Confidence level is 1 - alpha
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,

    #[arg(long, value_enum, default_value = "modwt")]
    pub transform: TransformArg,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub plot: PlotOut,

    /// Overlapping clusters
    #[arg(long)]
    pub overlapping: bool,

    /// Modified Allan variance (avar only)
    #[arg(long)]
    pub modified: bool,

    /// Confidence level is 1 - alpha
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimationArgs {
    /// Number of scales J
    #[arg(long, value_name = "J")]
    pub levels: Option<usize>,

    /// Random draws for the starting values
    #[arg(long, value_name = "G")]
    pub guesses: Option<usize>,

    /// Bootstrap replicates
    #[arg(long, value_name = "H")]
    pub bootstrap: Option<usize>,

    /// Perturbed restarts of the first-step search
    #[arg(long, value_name = "N")]
    pub restarts: Option<usize>,

    /// Confidence level is 1 - alpha
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[command(flatten)]
    pub plot: PlotOut,

    /// Model, e.g. "3*GM()+WN()+QN()+RW()"
    #[arg(short, long)]
    pub model: String,

    /// Print the estimate table instead of the JSON document
    #[arg(long)]
    pub summary: bool,

    /// Plot the implied WV of each process as well
    #[arg(long)]
    pub decomposition: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bootstrap,
    Fast,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub estimation: EstimationArgs,

    /// Candidate model; repeat for each candidate
    #[arg(short, long = "model", required = true)]
    pub models: Vec<String>,

    /// How the optimism penalty is estimated (default bootstrap)
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// Print an aligned table instead of CSV
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct AutoArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[command(flatten)]
    pub plot: PlotOut,

    /// Full model whose sub-models are ranked
    #[arg(short, long)]
    pub model: String,

    /// How the optimism penalty is estimated (default fast)
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// Largest number of sub-models
    #[arg(long, default_value_t = 64)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub plot: PlotOut,

    /// Number of scales (default floor(log2 T) - 1)
    #[arg(long, value_name = "J")]
    pub levels: Option<usize>,

    /// Confidence level is 1 - alpha
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model with every parameter value given, e.g. "AR1(phi=0.9,sigma2=0.01)+WN(sigma2=1)"
    #[arg(short, long)]
    pub model: String,

    /// Number of samples
    #[arg(short = 'T', long = "length", value_name = "T")]
    pub length: usize,

    /// Burn-in of the stationary processes (derived from the dynamics by default)
    #[arg(long, value_name = "N")]
    pub burn_in: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Companion CSV written next to an earlier plot
    #[arg(short, long, value_name = "PATH")]
    pub data: PathBuf,

    #[arg(long, value_enum)]
    pub kind: PlotKind,

    /// Plot title
    #[arg(long, value_name = "TEXT")]
    pub title: Option<String>,

    /// Leave out the confidence ribbons
    #[arg(long)]
    pub no_ci: bool,
}
