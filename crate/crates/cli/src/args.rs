use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ddd", version, about = "Error consistency and dichotomous data difficulty analysis")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "DDD_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

/// `last` or an explicit epoch number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochArg {
    Last,
    At(u32),
}

impl FromStr for EpochArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "last" {
            return Ok(EpochArg::Last);
        }
        s.parse()
            .map(EpochArg::At)
            .map_err(|_| format!("expected an epoch number or `last`, got {s:?}"))
    }
}

#[derive(Debug, Args)]
pub struct CubeArgs {
    /// Binary cube written by `ddd ingest`.
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long, default_value = "last")]
    pub epoch: EpochArg,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    /// Comma-separated model ids; all models when omitted.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Jsonl,
    /// A cube cache file.
    Cache,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Svg,
    Ppm,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    /// One model's mean correctness over all epochs (needs --model).
    Model,
    /// Mean correctness of all models at --epoch.
    All,
    /// Cube order.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Uniform,
    Dichotomous,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pearson,
    Spearman,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a decision log into a binary cube and summarise it.
    Ingest {
        /// Log file (or cube with --format cache).
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: InputFormat,
        /// Cube cache to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the decisions back out as a CSV log.
        #[arg(long)]
        records_out: Option<PathBuf>,
    },
    /// Error consistency between two models, optionally on an image subset.
    Kappa {
        #[command(flatten)]
        cube: CubeArgs,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// File with one image id per line.
        #[arg(long)]
        subset: Option<PathBuf>,
    },
    /// Pairwise κ matrix of all models.
    Matrix {
        #[command(flatten)]
        cube: CubeArgs,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the mean κ within one condition instead of the matrix.
        #[arg(long)]
        condition: Option<String>,
        /// Heatmap destination; format from --format or the extension.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<ImageFormat>,
        /// Heatmap cell size in pixels.
        #[arg(long, default_value_t = 24)]
        cell: u32,
    },
    /// Correct-count histogram with binomial baseline and optional overlay.
    Histogram {
        #[command(flatten)]
        cube: CubeArgs,
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long, value_enum, default_value = "exact")]
        baseline: BaselineArg,
        /// Success probability of the baseline; mean accuracy when omitted.
        #[arg(long)]
        p: Option<f64>,
        /// Images drawn for the sampled baseline; cube size when omitted.
        #[arg(long)]
        samples: Option<usize>,
        /// File with one image id per line to overlay.
        #[arg(long)]
        overlay: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split images into trivial, impossible and inconclusive.
    Classify {
        #[command(flatten)]
        cube: CubeArgs,
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long, default_value_t = 0)]
        tolerance: u32,
        /// Write the full partition as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Build a 2AFC experiment manifest from the partition.
        #[arg(long)]
        manifest_out: Option<PathBuf>,
        #[arg(long, default_value_t = 149, requires = "manifest_out")]
        trials: usize,
        /// Image ids (one per line) never to show in the experiment.
        #[arg(long, requires = "manifest_out")]
        exclude: Option<PathBuf>,
    },
    /// Export the image ids of a difficulty band.
    Subsample {
        #[command(flatten)]
        cube: CubeArgs,
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long, default_value_t = 0)]
        tolerance: u32,
        /// Keep images whose correct-count is in MIN:MAX instead of the
        /// inconclusive ones.
        #[arg(long)]
        band: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learning dynamics over epochs: swap and flip rates, orderings, rasters.
    Epochs {
        #[command(flatten)]
        cube: CubeArgs,
        /// Model whose epoch-to-epoch changes are reported.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, value_enum)]
        order: Option<OrderArg>,
        /// Write image ids in display order, one per line.
        #[arg(long)]
        order_out: Option<PathBuf>,
        /// Decision raster destination; format from --format or the extension.
        #[arg(long)]
        raster: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<ImageFormat>,
        /// Shade by fraction of all models correct instead of one model.
        #[arg(long)]
        ensemble: bool,
        #[arg(long)]
        binning: Option<usize>,
        #[arg(long, default_value_t = 4)]
        cell_width: u32,
        #[arg(long, default_value_t = 1)]
        cell_height: u32,
    },
    /// Per-class accuracy with best and worst classes.
    Classes {
        #[command(flatten)]
        cube: CubeArgs,
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Gaussian-noise datasets with a known difficulty gradient.
    Synth {
        #[command(subcommand)]
        action: SynthAction,
    },
    /// Simulate decision makers under a difficulty regime.
    Sim {
        #[arg(long, value_enum, default_value = "uniform")]
        regime: RegimeArg,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        trivial: Option<f64>,
        #[arg(long)]
        impossible: Option<f64>,
        #[arg(long)]
        p_mid: Option<f64>,
        /// Per-image success probabilities, one per line.
        #[arg(long)]
        q_file: Option<PathBuf>,
        #[arg(long, default_value_t = 13)]
        models: usize,
        /// Image count; 50,000 by default, the q-file length for custom regimes.
        #[arg(long)]
        images: Option<usize>,
        /// Decision-log CSV destination; stdout when neither output is given.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cube_out: Option<PathBuf>,
    },
    /// Representational similarity between two feature tables.
    Rsa {
        /// Feature CSV with header `image_id,<dims...>`.
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "spearman")]
        method: MethodArg,
        #[arg(long)]
        rdm_a_out: Option<PathBuf>,
        #[arg(long)]
        rdm_b_out: Option<PathBuf>,
    },
    /// Serve the 2AFC experiment over HTTP.
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding the experiment images.
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Static front-end bundle served at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
        /// Shuffle trial order per observer (disables inter-subject κ).
        #[arg(long)]
        reshuffle: bool,
    },
    /// Experiment statistics from a manifest and its response log.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        reshuffle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Inter-subject κ matrix as CSV.
        #[arg(long)]
        kappa_out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SynthAction {
    /// Write a dataset to disk.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        classes: u32,
        #[arg(long, default_value_t = 20)]
        train: u32,
        #[arg(long, default_value_t = 500)]
        test: u32,
        /// CxHxW.
        #[arg(long, default_value = "3x32x32")]
        shape: String,
        /// 20,000 train and 50 test images per class at 3x224x224.
        #[arg(long, conflicts_with_all = ["train", "test", "shape"])]
        paper_scale: bool,
    },
    /// KL divergence between adjacent classes.
    Kl {
        #[arg(long, default_value_t = 100)]
        classes: u32,
    },
    /// Classify a dataset's test split with the likelihood oracle.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Oracle decisions as a decision-log CSV.
        #[arg(long)]
        log_out: Option<PathBuf>,
        /// Per-class table destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
