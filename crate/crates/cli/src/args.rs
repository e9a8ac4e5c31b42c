use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use auscult_core::{ForestParams, FrameConfig, MelConfig, Window};

#[derive(Debug, Parser)]
#[command(name = "auscult", version, about = "Swallow sound analysis and dysphagia classification")]
pub struct Cli {
    /// Run every stage on a single thread. Results are identical either way.
    #[arg(long, global = true)]
    pub serial: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the 25 per-swallow features into a CSV.
    Extract(ExtractArgs),
    /// Kruskal-Wallis test of every feature across groups.
    Stats(StatsArgs),
    /// Standardize features and embed them in two dimensions.
    Reduce(ReduceArgs),
    /// Train a random forest on a feature CSV.
    Train(TrainArgs),
    /// Classify the rows of a feature CSV with a saved model.
    Predict(PredictArgs),
    /// Repeated stratified train/test evaluation.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic corpus of WAV files and annotations.
    Synth(SynthArgs),
    /// Print the summary table of a saved evaluation report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowArg {
    Hamming,
    Rectangular,
}

#[derive(Debug, Args)]
pub struct FrameArgs {
    /// Analysis frame length in seconds.
    #[arg(long, default_value_t = 0.025)]
    pub frame_len_s: f64,
    /// Hop between frames in seconds.
    #[arg(long, default_value_t = 0.010)]
    pub hop_s: f64,
    /// FFT size [default: smallest power of two covering one frame].
    #[arg(long)]
    pub fft_size: Option<usize>,
    #[arg(long, value_enum, default_value = "hamming")]
    pub window: WindowArg,
    /// Number of mel filters.
    #[arg(long, default_value_t = 20)]
    pub mel_filters: usize,
    /// Lowest mel filter edge in Hz.
    #[arg(long, default_value_t = 0.0)]
    pub mel_fmin: f64,
    /// Highest mel filter edge in Hz [default: Nyquist].
    #[arg(long)]
    pub mel_fmax: Option<f64>,
}

impl FrameArgs {
    pub fn frame(&self) -> FrameConfig {
        FrameConfig {
            frame_len_s: self.frame_len_s,
            hop_s: self.hop_s,
            fft_size: self.fft_size,
            window: match self.window {
                WindowArg::Hamming => Window::Hamming,
                WindowArg::Rectangular => Window::Rectangular,
            },
        }
    }

    pub fn mel(&self) -> MelConfig {
        MelConfig { n_filters: self.mel_filters, f_min_hz: self.mel_fmin, f_max_hz: self.mel_fmax }
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Annotation CSV (start_s,end_s,label,consistency,subject_id[,wav]).
    #[arg(long)]
    pub annotations: PathBuf,
    /// Recording for rows without a `wav` column.
    #[arg(long)]
    pub wav: Option<PathBuf>,
    /// Output feature CSV.
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub frame: FrameArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupingArg {
    /// Normal against dysphagic.
    ByLabel,
    /// Consistencies compared inside each label; one table per label.
    ByConsistencyWithinLabel,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Feature CSV.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum, default_value = "by-label")]
    pub grouping: GroupingArg,
    /// Output significance CSV. Within-label groupings write
    /// `<stem>_<label>.csv` next to it instead.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Pca,
    Tsne,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum, default_value = "pca")]
    pub method: MethodArg,
    /// Output embedding CSV (x,y,label,segment_id).
    #[arg(long, short)]
    pub out: PathBuf,
    /// t-SNE perplexity, capped at (n - 1) / 3.
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    /// t-SNE gradient steps.
    #[arg(long, default_value_t = 1000)]
    pub tsne_iterations: usize,
    #[arg(long, default_value_t = 200.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Features tried per split [default: floor(sqrt(n_features))].
    #[arg(long)]
    pub max_features: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub min_samples_leaf: usize,
    /// Maximum tree depth [default: unlimited].
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Grow every tree on the full training set.
    #[arg(long)]
    pub no_bootstrap: bool,
}

impl ForestArgs {
    pub fn params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_features: self.max_features,
            min_samples_leaf: self.min_samples_leaf,
            max_depth: self.max_depth,
            bootstrap: !self.no_bootstrap,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Output model JSON.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Output CSV (segment_id,label,vote_fraction).
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Output report JSON.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the summary table as CSV.
    #[arg(long)]
    pub summary_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 11)]
    pub iterations: usize,
    /// Share of each class used for training.
    #[arg(long, default_value_t = 0.6)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives annotations.csv and wav/.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 152)]
    pub normal: usize,
    #[arg(long, default_value_t = 110)]
    pub dysphagic: usize,
    /// Class contrast; 0 makes the classes indistinguishable.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 4000)]
    pub sample_rate: u32,
    /// Length of each recording in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON written by `evaluate`.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of features to list by median importance.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}
