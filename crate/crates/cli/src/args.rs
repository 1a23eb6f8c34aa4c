use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eclose::inference::ScheduleMode;
use eclose::{DistributionSpec, FunctionalOrder, QuadraticCoefficients};

/// Rényi entropy, quadratic functional and divergence estimators from ε-close pair counts.
///
/// Set ECLOSE_THREADS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "eclose", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format. CSV is a field,value table, or the residual column for
    /// `simulate`.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate q_{k1,k2} or a quadratic functional, with a confidence interval.
    Estimate(EstimateArgs),
    /// Estimate a density power divergence D_s or pseudodistance R_s.
    Divergence(DivergenceArgs),
    /// Estimate Rényi entropy or differential variability.
    Entropy(EntropyArgs),
    /// Two-sample test of equal densities.
    Test(TestArgs),
    /// Monte Carlo experiment from distribution specs.
    Simulate(SimulateArgs),
    /// Evaluate a bandwidth schedule ε(n).
    Schedule(ScheduleArgs),
    /// Draw a sample from a distribution spec and print it as CSV.
    Draw(DrawArgs),
}

/// Each sample comes from a CSV file or is drawn from a spec.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with the X sample (rows are points).
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "spec_x",
        required_unless_present = "spec_x"
    )]
    pub x: Option<PathBuf>,
    /// CSV file with the Y sample; omit for one-sample functionals.
    #[arg(long, value_name = "FILE", conflicts_with = "spec_y")]
    pub y: Option<PathBuf>,
    /// Draw X from a spec such as `t(3)^3` or `uniform(0,1)*normal(0,2)`.
    #[arg(long, value_name = "SPEC", requires = "n1")]
    pub spec_x: Option<DistributionSpec>,
    #[arg(long, value_name = "SPEC", requires = "n2")]
    pub spec_y: Option<DistributionSpec>,
    #[arg(long, requires = "spec_x")]
    pub n1: Option<usize>,
    #[arg(long, requires = "spec_y")]
    pub n2: Option<usize>,
    /// Seed for drawing spec samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A fixed radius or a schedule; one is required.
#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// Closeness radius ε.
    #[arg(long, conflicts_with = "schedule")]
    pub epsilon: Option<f64>,
    /// Pilot radius ε0 for variance plug-ins (defaults to ε).
    #[arg(long)]
    pub epsilon0: Option<f64>,
    /// Schedule mode: smooth, alpha, gamma or agnostic.
    #[arg(long, value_name = "MODE", requires = "c")]
    pub schedule: Option<ScheduleMode>,
    /// Schedule constant.
    #[arg(long, requires = "schedule")]
    pub c: Option<f64>,
    /// Smoothness for the alpha schedule.
    #[arg(long, requires = "schedule", conflicts_with = "gamma")]
    pub alpha: Option<f64>,
    /// Exponent for the gamma schedule.
    #[arg(long, requires = "schedule")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    /// Order K1,K2 of q_{k1,k2}.
    #[arg(
        long,
        value_name = "K1,K2",
        conflicts_with = "a",
        required_unless_present = "a"
    )]
    pub k: Option<FunctionalOrder>,
    /// Coefficients A0,A1,A2 of a0 q20 + a1 q11 + a2 q02.
    #[arg(long, value_name = "A0,A1,A2", allow_hyphen_values = true)]
    pub a: Option<QuadraticCoefficients>,
    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// D_s
    Power,
    /// R_s
    Pseudo,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    #[arg(long, default_value_t = 2)]
    pub s: u32,
    #[arg(long, value_enum, default_value_t = Family::Power)]
    pub family: Family,
    /// Confidence level (intervals for s = 2, power family).
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    /// (k,0) for Rényi entropy of order k, 1,1 for differential variability.
    #[arg(long, value_name = "K1,K2", default_value = "2,0")]
    pub k: FunctionalOrder,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    /// q_{k1,k2} (needs --k with k1 + k2 = 2)
    Q,
    /// a0 q20 + a1 q11 + a2 q02 (needs --a)
    Quadratic,
    D2,
    /// H_k (needs --k with k1 + k2 = 2, default 2,0)
    Entropy,
    Variability,
    /// two-sample test calibration or power
    Test,
    /// smoothing bias over --epsilons (needs --a or --k)
    Bias,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_name = "SPEC")]
    pub spec_x: DistributionSpec,
    /// Defaults to the X spec.
    #[arg(long, value_name = "SPEC")]
    pub spec_y: Option<DistributionSpec>,
    #[arg(long)]
    pub n1: usize,
    #[arg(long, default_value_t = 0)]
    pub n2: usize,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    #[arg(long, value_enum)]
    pub target: TargetArg,
    #[arg(long, value_name = "K1,K2", conflicts_with = "a")]
    pub k: Option<FunctionalOrder>,
    #[arg(long, value_name = "A0,A1,A2", allow_hyphen_values = true)]
    pub a: Option<QuadraticCoefficients>,
    /// Confidence level, or significance level for the test target
    /// (defaults 0.95 and 0.05).
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub nsim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Radii for the bias target.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Vec<f64>,
    /// Plain averages for the bias target, without the control variate.
    #[arg(long)]
    pub no_control_variate: bool,
    /// Write residuals as a one-column CSV.
    #[arg(long, value_name = "FILE")]
    pub residuals_out: Option<PathBuf>,
    /// Write a residual histogram table as CSV.
    #[arg(long, value_name = "FILE")]
    pub histogram_out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    /// Write normal QQ points as CSV.
    #[arg(long, value_name = "FILE")]
    pub qq_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// smooth, alpha, gamma or agnostic
    pub mode: ScheduleMode,
    #[arg(long)]
    pub c: f64,
    #[arg(long, conflicts_with = "gamma")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Total sample size n1 + n2.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Args)]
pub struct DrawArgs {
    #[arg(long, value_name = "SPEC")]
    pub spec: DistributionSpec,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
