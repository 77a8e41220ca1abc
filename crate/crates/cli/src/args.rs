use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypernull_core::depth::{LambdaPolicy, NoiseKind};
use hypernull_core::figures::FigureName;
use hypernull_core::sweep::{Quantity, Scale, SweepAxis};
use hypernull_core::{Format, Noise, Squeeze, ThresholdPolicy, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "hypernull", version, about = "Nullifier variances, thresholds and noise depths of CV hypergraph states")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file; any long flag can be set there, command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variance, thresholds and classification of one scenario
    Eval(EvalArgs),
    /// Data tables behind a figure
    Figure(FigureArgs),
    /// One quantity or more over a parameter grid
    Sweep(SweepArgs),
    /// Critical noise at which the criterion is lost
    Depth(DepthArgs),
    /// Cross-validation battery
    Selfcheck(SelfcheckArgs),
}

fn parse_noise(s: &str) -> Result<Noise, String> {
    s.parse().map_err(|e: hypernull_core::Error| e.to_string())
}

fn parse_squeeze(s: &str) -> Result<Squeeze, String> {
    s.parse().map_err(|e: hypernull_core::Error| e.to_string())
}

fn parse_figure(s: &str) -> Result<FigureName, String> {
    s.parse().map_err(|e: hypernull_core::Error| e.to_string())
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: hypernull_core::Error| e.to_string())
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    s.parse().map_err(|e: hypernull_core::Error| e.to_string())
}

/// `fixed-at-gamma | optimized | <number>`
fn parse_lambda_policy(s: &str) -> Result<LambdaPolicy, String> {
    match s {
        "fixed-at-gamma" | "gamma" => Ok(LambdaPolicy::FixedAtGamma),
        "optimized" => Ok(LambdaPolicy::Optimized),
        other => other
            .parse()
            .map(LambdaPolicy::FixedValue)
            .map_err(|_| format!("expected fixed-at-gamma | optimized | <number>, got `{other}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    Ground,
    LocalSqueezed,
}

impl From<ThresholdArg> for ThresholdPolicy {
    fn from(t: ThresholdArg) -> Self {
        match t {
            ThresholdArg::Ground => ThresholdPolicy::Ground,
            ThresholdArg::LocalSqueezed => ThresholdPolicy::LocalSqueezed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    Hypergraph,
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Loss,
    Thermal,
    InitialThermal,
}

impl From<KindArg> for NoiseKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Loss => NoiseKind::Loss,
            KindArg::Thermal => NoiseKind::Thermalisation,
            KindArg::InitialThermal => NoiseKind::InitialThermal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Linear,
    Log,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Linear => Scale::Linear,
            ScaleArg::Log => Scale::Log,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Hypergraph state or single-mode phase state
    #[arg(long, value_enum, default_value = "hypergraph")]
    pub state: StateArg,
    /// Mode count, or phase order for phase states
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Defaults to gamma
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// momentum:<x>dB | position:<x>dB | r:<float> | none
    #[arg(long, default_value = "none", value_parser = parse_squeeze, allow_hyphen_values = true)]
    pub squeeze: Squeeze,
    /// ideal | loss:<T> | thermal:<nbar>
    #[arg(long, default_value = "ideal", value_parser = parse_noise)]
    pub noise: Noise,
    /// Initial thermal occupation per mode
    #[arg(long, default_value_t = 0.0)]
    pub n0: f64,
    /// One-based nullifier index
    #[arg(long, default_value_t = 1)]
    pub index: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Output file (stdout when absent)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Threshold used for the margin
    #[arg(long, value_enum, default_value = "local-squeezed")]
    pub threshold: ThresholdArg,
    /// Also estimate the variance by Monte Carlo with this many samples
    #[arg(long)]
    pub samples: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(value_parser = parse_figure)]
    pub name: FigureName,
    #[arg(long)]
    pub panel: Option<String>,
    /// Grid size of the swept axis
    #[arg(long)]
    pub points: Option<usize>,
    /// Also optimize squeezing within each class in the depth-versus-k tables
    #[arg(long)]
    pub co_optimize_r: bool,
    /// Largest k in the depth-versus-k tables
    #[arg(long, default_value_t = 7)]
    pub kmax: usize,
    /// Threshold that sets the noise levels of fig1
    #[arg(long, value_enum, default_value = "ground")]
    pub threshold: ThresholdArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Output directory
    #[arg(long, short, default_value = ".")]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// gamma | lambda | r | T | nbar | n0 | k
    #[arg(long, value_parser = parse_axis)]
    pub axis: SweepAxis,
    #[arg(long, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub max: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub scale: ScaleArg,
    /// Comma-separated output columns
    #[arg(long, action = clap::ArgAction::Set, value_delimiter = ',', value_parser = parse_quantity, default_value = "variance,ground_thr,squeezed_thr,margin")]
    pub outputs: Vec<Quantity>,
    /// On a gamma axis keep the template lambda instead of setting lambda = gamma
    #[arg(long)]
    pub keep_lambda: bool,
    #[arg(long, value_enum, default_value = "local-squeezed")]
    pub threshold: ThresholdArg,
    /// fixed-at-gamma | optimized | <number>
    #[arg(long, value_parser = parse_lambda_policy, default_value = "fixed-at-gamma", allow_hyphen_values = true)]
    pub lambda_policy: LambdaPolicy,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DepthArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "loss")]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value = "local-squeezed")]
    pub threshold: ThresholdArg,
    /// fixed-at-gamma | optimized | <number>
    #[arg(long, value_parser = parse_lambda_policy, default_value = "fixed-at-gamma", allow_hyphen_values = true)]
    pub lambda_policy: LambdaPolicy,
    /// Maximize robustness over gamma instead of using --gamma
    #[arg(long)]
    pub optimize_gamma: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelfcheckArgs {
    /// Reduced sample counts
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo samples per scenario
    #[arg(long)]
    pub samples: Option<u64>,
    /// Report file (stdout when absent)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
