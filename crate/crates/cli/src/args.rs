use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "actdiag",
    version,
    about = "Entropy and mutual-information diagnostics for neuron activations"
)]
pub struct Cli {
    /// Progress messages on standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-neuron entropy and pairwise MI of an activation matrix (.npy or .csv).
    Analyze(AnalyzeArgs),
    /// Gaussian-mixture density over the MI values of a report or a CSV of values.
    Density(DensityArgs),
    /// Kendall tau between an extrinsic metric and each report's diversity measures.
    Rank(RankArgs),
    /// Concentric-circles toy experiments.
    Toy {
        #[command(subcommand)]
        command: ToyCommand,
    },
    /// Convert a numeric CSV matrix to NPY.
    Convert { input: PathBuf, output: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    /// Counts clamped to at least one inside the digamma.
    Paper,
    /// The original estimator's psi(count + 1).
    Ksg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DigammaArg {
    Exact,
    PaperApprox,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Histogram bins for entropy.
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Neighbour order for MI.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Paper)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = DigammaArg::Exact)]
    pub digamma: DigammaArg,
    /// Skip z-scoring before MI.
    #[arg(long)]
    pub no_normalize: bool,
    /// Skip the tie-breaking jitter before MI.
    #[arg(long)]
    pub no_jitter: bool,
    /// Jitter amplitude as a fraction of each column's range.
    #[arg(long, default_value_t = 1e-10)]
    pub jitter_scale: f64,
    /// Analyse a seeded random subset of at most this many rows.
    #[arg(long)]
    pub max_samples: Option<usize>,
    /// Seed for subsampling and jitter.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report negative MI estimates as zero.
    #[arg(long)]
    pub clamp_negative: bool,
    /// Also estimate each neuron's MI with itself.
    #[arg(long)]
    pub include_diagonal: bool,
    /// Keep the full MI matrix even for very wide layers.
    #[arg(long)]
    pub force_full_mi: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub matrix: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Write the N x N MI matrix as NPY (diagonal NaN unless included).
    #[arg(long)]
    pub full_mi: Option<PathBuf>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// A report JSON or a CSV of values.
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub max_components: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrientationArg {
    /// Negate MI (shortcut-style memorisation).
    Heuristic,
    /// Negate entropy (memorised labels).
    ExampleLevel,
    /// Negate nothing.
    Raw,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV with header `model_id,metric`; ids match report file stems.
    #[arg(long)]
    pub extrinsic: PathBuf,
    #[arg(long, value_enum, default_value_t = OrientationArg::Heuristic)]
    pub orientation: OrientationArg,
    #[arg(required = true, num_args = 2..)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Base,
    Spurious,
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariantArg {
    Spurious,
    Shuffled,
}

#[derive(Debug, Args)]
pub struct TrainingArgs {
    /// Hidden widths, comma separated; defaults depend on the variant.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum ToyCommand {
    /// Train one model and analyse its hidden layers.
    Train {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write each hidden layer's activations as NPY plus a manifest.
        #[arg(long)]
        dump_activations: Option<PathBuf>,
        #[command(flatten)]
        training: TrainingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a grid of models and rank them by each measure.
    Sweep {
        #[arg(long, value_enum)]
        variant: SweepVariantArg,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Seeds 0..N per setting.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[command(flatten)]
        training: TrainingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one CSV row per run.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}
