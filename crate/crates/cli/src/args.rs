use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "vidprobe", version, about = "Evaluate frozen video-model embeddings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Output directory for reports and artifacts.
    #[arg(long, global = true, env = "VIDPROBE_OUT", default_value = "vidprobe-out")]
    pub out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "VIDPROBE_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train and evaluate a probe on frozen embeddings.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// k-nearest-neighbor classification.
    Knn(KnnArgs),
    /// Forward-vs-reversed LDA separability.
    LdaReversal(LdaArgs),
    /// 2-D projections for plotting.
    #[command(subcommand)]
    Viz(VizCommand),
    /// Temporal localization and segmentation metrics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Frame sampling plans for the exporter.
    Plan(PlanArgs),
    /// Synthetic embedding sets with known Bayes accuracy.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Merge existing reports.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Args, Debug)]
pub struct ProbeInputs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub eval: PathBuf,
    /// Named hyperparameter bundle, e.g. `k400-lp`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Benchmark label recorded in the report (defaults to the preset's).
    #[arg(long)]
    pub benchmark: Option<String>,
    /// Model label recorded in the report.
    #[arg(long, default_value = "model")]
    pub model: String,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub final_lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum ProbeCommand {
    Linear {
        #[command(flatten)]
        inputs: ProbeInputs,
        #[arg(long)]
        momentum: Option<f64>,
    },
    Attentive {
        #[command(flatten)]
        inputs: ProbeInputs,
        #[arg(long)]
        heads: Option<usize>,
        #[arg(long)]
        init_std: Option<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricArg {
    Cosine,
    L2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Uniform,
    Clip,
    Video,
    All,
}

#[derive(Args, Debug)]
pub struct KnnArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub eval: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Cosine)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Video)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 2.0)]
    pub clip_length_sec: f64,
    #[arg(long)]
    pub benchmark: Option<String>,
    #[arg(long, default_value = "model")]
    pub model: String,
}

#[derive(Args, Debug)]
pub struct LdaArgs {
    #[arg(long)]
    pub forward: PathBuf,
    #[arg(long)]
    pub reversed: PathBuf,
    /// Ridge added to the within-class scatter (default 1e-6·trace/d).
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Subcommand, Debug)]
pub enum VizCommand {
    Tsne {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 200.0)]
        learning_rate: f64,
        #[arg(long, default_value_t = 12.0)]
        early_exaggeration: f64,
        #[arg(long, default_value_t = 250)]
        exaggeration_steps: usize,
        /// Neighbors used for the label-purity score.
        #[arg(long, default_value_t = 10)]
        purity_k: usize,
    },
    Pca {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        purity_k: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum MetricsCommand {
    /// Detection mAP at one or more tIoU thresholds.
    Tal {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.4,0.5,0.6,0.7")]
        tiou: Vec<f64>,
        /// Reject labels outside `0..classes`.
        #[arg(long)]
        classes: Option<usize>,
    },
    /// Segmental F1@{10,25,50}, edit score and frame accuracy.
    Tas {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Label excluded from segmental F1 and edit.
        #[arg(long)]
        background: Option<usize>,
        #[arg(long)]
        classes: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanMode {
    Uniform,
    Multiclip,
    Views,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// JSON array of `{id, duration_sec, fps[, short_side, long_side]}`.
    #[arg(long)]
    pub videos: PathBuf,
    #[arg(long, value_enum, default_value_t = PlanMode::Multiclip)]
    pub mode: PlanMode,
    /// Probe preset (views mode) or TAL/TAS preset (multiclip mode).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 16)]
    pub frames: usize,
    /// Clip length in seconds (multiclip).
    #[arg(long)]
    pub clip_sec: Option<f64>,
    /// Clip stride in seconds (multiclip).
    #[arg(long)]
    pub stride_sec: Option<f64>,
    /// Resampling frame rate; overrides each video's own.
    #[arg(long)]
    pub fps: Option<f64>,
    /// Spatial x temporal views, e.g. `3x4` (views mode).
    #[arg(long)]
    pub views: Option<String>,
    /// Frame stride within a view clip (views mode).
    #[arg(long)]
    pub temporal_stride: Option<usize>,
    #[arg(long, default_value_t = 224)]
    pub short_side: usize,
    #[arg(long, default_value_t = 224)]
    pub long_side: usize,
}

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// Class Gaussians around simplex means.
    Gaussians {
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        per_class: usize,
        #[arg(long, default_value_t = 50)]
        eval_per_class: usize,
        /// Pairwise distance between class means, in noise σ.
        #[arg(long, default_value_t = 5.0)]
        sep: f64,
        #[arg(long, default_value_t = 4)]
        clips: usize,
        #[arg(long, default_value_t = 1)]
        tokens: usize,
    },
    /// Forward/reversed pairs differing along one direction.
    MotionPairs {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 5.0)]
        strength: f64,
    },
    /// Patch-level set whose class lives in a single token.
    TokenSignal {
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        #[arg(long, default_value_t = 50)]
        eval_per_class: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 8)]
        tokens: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ReportCommand {
    /// Appearance-vs-motion accuracy pairs from probe or KNN reports.
    Scatter {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        /// `appearance:motion` benchmark pairs.
        #[arg(long, value_delimiter = ',', default_value = "k400:ssv2,mit:dv48")]
        pairs: Vec<String>,
    },
}
