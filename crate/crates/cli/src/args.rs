use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "evib",
    version,
    about = "Electrovibration friction identification and compensation"
)]
pub struct Cli {
    /// Worker threads for trial-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trial, or the whole protocol grid with --grid.
    Simulate(SimulateArgs),
    /// Extract frequency-response points from trial directories.
    Extract(ExtractArgs),
    /// Fit a model to a table of frequency-response points.
    Identify(IdentifyArgs),
    /// Build the speed-dependent friction law from per-cell fits.
    Regress(RegressArgs),
    /// Correlate friction parameters with skin parameters.
    Correlate(CorrelateArgs),
    /// Pre-distort a target friction waveform into a screen drive.
    Compensate(CompensateArgs),
    /// Render a target through the simulated plant and report the spectral match.
    VerifyRender(VerifyRenderArgs),
    /// Run extraction, fitting, regression and correlation over a dataset.
    Pipeline(PipelineArgs),
    /// Summarize pipeline outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Versioned JSON simulation config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Emit every grid cell as P<participant>/v<speed>/f<force>/freq<hz>/.
    #[arg(long)]
    pub grid: bool,
    /// Message frequency of a single trial, Hz.
    #[arg(long, default_value_t = 100.0, conflicts_with = "grid")]
    pub freq: f64,
    /// Sliding speed of a single trial, mm/s.
    #[arg(long, default_value_t = 60.0, conflicts_with = "grid")]
    pub speed: f64,
    /// Normal force of a single trial, N.
    #[arg(long, default_value_t = 0.4, conflicts_with = "grid")]
    pub force: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Binary,
    Csv,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Trial directories, or dataset roots to search for trials.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "frf_points.csv")]
    pub out: PathBuf,
    /// Also write skin (velocity over force) points here.
    #[arg(long)]
    pub skin_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// First-order friction model.
    First,
    /// Second-order skin model.
    Second,
    /// Normal-direction rig model from impact data.
    SetupNormal,
    /// Lateral rig model from impact data.
    SetupLateral,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    pub points: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Rig model file (default: the shipped baseline).
    #[arg(long, conflicts_with = "no_setup")]
    pub setup: Option<PathBuf>,
    /// Fit the points as they are, without removing rig dynamics.
    #[arg(long)]
    pub no_setup: bool,
    /// Upper frequency of the fit band, Hz.
    #[arg(long)]
    pub band_max: Option<f64>,
    #[arg(long, default_value = "fit.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    pub fits: PathBuf,
    #[arg(long, default_value = "empirical_model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    pub fits: PathBuf,
    #[arg(long, default_value = "correlations.csv")]
    pub out: PathBuf,
}

/// The friction waveform to render: a file, or a sum of tones.
#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Target friction waveform (.csv or .f64).
    #[arg(long, required_unless_present = "tone", conflicts_with = "tone")]
    pub target: Option<PathBuf>,
    /// Tone frequency, Hz (repeatable).
    #[arg(long)]
    pub tone: Vec<f64>,
    /// Amplitude of each tone, N.
    #[arg(long, default_value_t = 0.004)]
    pub tone_amplitude: f64,
    /// Length of the tone target, s.
    #[arg(long, default_value_t = 1.0)]
    pub tone_duration: f64,
}

#[derive(Debug, Args)]
pub struct CompensateArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Sliding speed to compensate for, mm/s.
    #[arg(long)]
    pub speed: f64,
    /// Empirical model (default: the published speed law).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Versioned JSON render config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct VerifyRenderArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Speed the compensation is designed for, mm/s.
    #[arg(long)]
    pub speed: f64,
    /// Speed the plant actually runs at (default: the design speed).
    #[arg(long)]
    pub run_speed: Option<f64>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Dataset root (overrides the config).
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub setup: Option<PathBuf>,
    #[arg(long)]
    pub band_max: Option<f64>,
    /// Skip the skin-model fits.
    #[arg(long)]
    pub no_skin: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Pipeline output directory.
    pub outputs: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}
