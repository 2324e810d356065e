//! `figkit`: figuration measurement pipeline from map manifests to reports.

mod artifacts;
mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use figkit::raster::AblationMode;
use figkit::segeval::{FitTarget, Weighting};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "figkit", version, about = "Measure cartographic figuration on map corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the procedural mini-corpus (maps, labels, predictions, manifest).
    Synth(SynthArgs),
    /// Cut texels and write the texel index with tile PNGs.
    Extract(ExtractArgs),
    /// Compute the 29 descriptors (and the simplified 14) for every texel.
    Features(FeaturesArgs),
    /// Bootstrap κ per class (or per map) from a feature store.
    Kappa(KappaArgs),
    /// Render a radial kurtograph from a κ report.
    Kurtograph(KurtographArgs),
    /// Pearson inter-class correlation of feature histograms.
    Correlate(CorrelateArgs),
    /// t-SNE embedding snapped to a grid, with a texel montage.
    Embed(EmbedArgs),
    /// Apply an ablation transform to every map.
    Ablate(AblateArgs),
    /// Score predicted label rasters against ground truth.
    Segeval(SegevalArgs),
    /// Fit a training-size power law and extrapolate.
    Extrapolate(ExtrapolateArgs),
    /// Class area proportions over the labeled maps.
    Proportions(ProportionsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Classes {
    #[value(name = "3")]
    Three,
    #[value(name = "5")]
    Five,
}

impl Classes {
    pub fn ontology(self) -> figkit::corpus::Ontology {
        match self {
            Self::Three => figkit::corpus::Ontology::ThreeClass,
            Self::Five => figkit::corpus::Ontology::FiveClass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Class,
    Map,
}

#[derive(Debug, Clone, Args)]
pub struct OutArg {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Root seed; every stage derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TexelArgs {
    /// JSON array of map records.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Texel edge length in pixels.
    #[arg(long, default_value_t = figkit::corpus::DEFAULT_TEXEL_SIZE)]
    pub texel_size: u32,
    /// Grid step in pixels; defaults to the texel size.
    #[arg(long)]
    pub stride: Option<u32>,
    /// Minimum single-class share for a texel to be assigned that class.
    #[arg(long, default_value_t = figkit::corpus::DEFAULT_PURITY)]
    pub threshold: f64,
    /// Label ontology arity.
    #[arg(long, value_enum, default_value = "5")]
    pub classes: Classes,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub texels: TexelArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub texels: TexelArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// Feature store CSV.
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Downsampling trials.
    #[arg(long, default_value_t = figkit::kappa::DEFAULT_TRIALS)]
    pub trials: usize,
    /// How texels are grouped into sample sets.
    #[arg(long, value_enum, default_value = "class")]
    pub group_by: GroupBy,
}

#[derive(Debug, Args)]
pub struct KurtographArgs {
    /// κ report written by `kappa`.
    #[arg(long)]
    pub kappa: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Feature store CSV.
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    /// Corpus name used in matrix labels.
    #[arg(long, default_value = "corpus")]
    pub corpus: String,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Feature store CSV.
    #[arg(long)]
    pub features: PathBuf,
    /// Manifest of the maps the texels were cut from.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub seed: SeedArg,
    /// t-SNE perplexity.
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    /// Gradient-descent iterations.
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Texel edge length used when the store was built.
    #[arg(long, default_value_t = figkit::corpus::DEFAULT_TEXEL_SIZE)]
    pub texel_size: u32,
    /// Montage cell size in pixels.
    #[arg(long, default_value_t = 50)]
    pub cell: u32,
    /// Cap on embedded texels; a seeded subsample is taken above it.
    #[arg(long, default_value_t = 2500)]
    pub max_texels: usize,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// JSON array of map records.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    /// reference | gray | binary | textureless
    #[arg(long, value_parser = parse_mode)]
    pub mode: AblationMode,
}

#[derive(Debug, Args)]
pub struct SegevalArgs {
    /// Manifest whose label rasters are the ground truth.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory of predicted label PNGs named `<map id>.png`.
    #[arg(long)]
    pub predictions: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    /// Label ontology arity.
    #[arg(long, value_enum, default_value = "5")]
    pub classes: Classes,
    /// Square patch size for per-patch scores; 0 scores whole maps.
    #[arg(long, default_value_t = 0)]
    pub patch_size: u32,
}

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    /// CSV with `size,score` rows.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    /// Score to reach; reports the training size needed.
    #[arg(long)]
    pub target_score: Vec<f64>,
    /// Training size to evaluate the fitted curve at.
    #[arg(long)]
    pub target_size: Vec<f64>,
    /// Quantity the curve is fitted to.
    #[arg(long, value_enum, default_value = "score")]
    pub fit_target: FitTargetArg,
    /// Item weighting of the least-squares fit.
    #[arg(long, value_enum, default_value = "linear")]
    pub weighting: WeightingArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FitTargetArg {
    Score,
    Complement,
}

impl From<FitTargetArg> for FitTarget {
    fn from(v: FitTargetArg) -> Self {
        match v {
            FitTargetArg::Score => FitTarget::Score,
            FitTargetArg::Complement => FitTarget::Complement,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    Linear,
    Uniform,
}

impl From<WeightingArg> for Weighting {
    fn from(v: WeightingArg) -> Self {
        match v {
            WeightingArg::Linear => Weighting::Linear,
            WeightingArg::Uniform => Weighting::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProportionsArgs {
    /// JSON array of map records.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    /// Label ontology arity.
    #[arg(long, value_enum, default_value = "5")]
    pub classes: Classes,
}

fn parse_mode(s: &str) -> Result<AblationMode, String> {
    s.parse::<AblationMode>().map_err(|e| e.to_string())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FIGKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FIGKIT_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Extract(a) => commands::extract(a),
        Command::Features(a) => commands::features(a),
        Command::Kappa(a) => commands::kappa(a),
        Command::Kurtograph(a) => commands::kurtograph(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Embed(a) => commands::embed(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Segeval(a) => commands::segeval(a),
        Command::Extrapolate(a) => commands::extrapolate(a),
        Command::Proportions(a) => commands::proportions(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("figkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
