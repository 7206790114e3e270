mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use ase_core::{Loss, SpectralConfig, TrainerConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Adaptive similarity node embeddings.
#[derive(Debug, Parser, Serialize)]
#[command(name = "ase", version, about)]
pub struct Cli {
    /// Worker threads for parallel matvecs and independent rounds/trials.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Log progress (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Learn hop weights and write the embedding.
    Embed(EmbedArgs),
    /// Learn hop weights only.
    TrainTheta(TrainThetaArgs),
    /// Quality-of-measure study on a three-block SBM.
    Qom(QomArgs),
    /// Multi-label node classification over a label-rate sweep.
    EvalClassify(ClassifyArgs),
    /// Link prediction with Hadamard edge features.
    EvalLinkpred(LinkpredArgs),
    /// k-means on the embedding, scored by conductance.
    EvalCluster(ClusterArgs),
    /// Classification accuracy as one training parameter varies.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    /// Whitespace separated edge list.
    #[arg(long)]
    pub input: PathBuf,
    /// Fail on repeated edges instead of collapsing them.
    #[arg(long)]
    pub strict: bool,
    /// Drop nodes that only appear in self-loops.
    #[arg(long)]
    pub drop_isolated: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossArg {
    Hinge,
    LeastSquares,
    Logistic,
    BestSingleHop,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Hinge => Loss::Hinge,
            LossArg::LeastSquares => Loss::LeastSquares,
            LossArg::Logistic => Loss::Logistic,
            LossArg::BestSingleHop => Loss::BestSingleHop,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Largest hop K.
    #[arg(long, default_value_t = 10)]
    pub max_hop: usize,
    /// Sampled pairs per round (half edges, half non-edges).
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// L2 regularizer.
    #[arg(long, default_value_t = 1.0)]
    pub reg: f64,
    /// Hinge margin.
    #[arg(long, default_value_t = 1e-3)]
    pub margin: f64,
    /// Sampling rounds averaged into the final weights.
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
    #[arg(long, value_enum, default_value_t = LossArg::Hinge)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 1.0)]
    pub step_scale: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub pgd_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub pgd_iters: usize,
}

impl TrainArgs {
    pub fn config(&self) -> TrainerConfig {
        TrainerConfig {
            max_hop: self.max_hop,
            margin: self.margin,
            reg: self.reg,
            step_scale: self.step_scale,
            tol: self.pgd_tol,
            max_pgd_iters: self.pgd_iters,
            n_samples: self.samples,
            rounds: self.rounds,
            loss: self.loss.into(),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectralArgs {
    /// Embedding dimension d.
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    /// Lanczos residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub lanczos_tol: f64,
    /// Lanczos matvec budget (default 50·d).
    #[arg(long)]
    pub lanczos_max_iter: Option<usize>,
}

impl SpectralArgs {
    pub fn config(&self, threads: usize) -> SpectralConfig {
        SpectralConfig {
            dim: self.dim,
            tol: self.lanczos_tol,
            max_iter: self.lanczos_max_iter,
            parallel: threads > 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Tsv,
    Bin,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the hop weights in this report instead of learning them.
    #[arg(long)]
    pub theta: Option<PathBuf>,
    /// Output directory (default: next to the input).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainThetaArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (default: next to the input).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct QomArgs {
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    /// Within-block edge probability.
    #[arg(long)]
    pub p: f64,
    /// Between-block edge probability.
    #[arg(long)]
    pub q: f64,
    /// Asymmetry factor on the block 2–3 probability.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 30)]
    pub kmax: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LogisticArgs {
    /// Logistic regression L2 regularizer.
    #[arg(long, default_value_t = 1.0)]
    pub lr_reg: f64,
    /// Logistic regression gradient step.
    #[arg(long, default_value_t = 0.1)]
    pub lr_step: f64,
    #[arg(long, default_value_t = 500)]
    pub lr_iters: usize,
}

impl LogisticArgs {
    pub fn config(&self) -> ase_core::downstream::LogisticConfig {
        ase_core::downstream::LogisticConfig {
            reg: self.lr_reg,
            step: self.lr_step,
            iters: self.lr_iters,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    /// Embedding file (TSV or binary).
    #[arg(long)]
    pub embedding: PathBuf,
    /// `node<TAB>label[,label…]` lines.
    #[arg(long)]
    pub labels: PathBuf,
    /// Training label rates (default 0.02, 0.04, …, 0.20).
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Random splits per rate.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[command(flatten)]
    pub logistic: LogisticArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LinkpredArgs {
    /// Graph the embedding is computed on.
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Edges to predict. Without it a share of the input edges is held out.
    #[arg(long)]
    pub new_edges: Option<PathBuf>,
    /// Share of input edges held out when no new edges are given.
    #[arg(long, default_value_t = 0.5)]
    pub holdout: f64,
    /// Precomputed embedding; otherwise one is learned on the observed graph.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[command(flatten)]
    pub logistic: LogisticArgs,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Embedding file (TSV or binary).
    #[arg(long)]
    pub embedding: PathBuf,
    /// Cluster counts (default 4, 8, …, 40, 60, 80, 100).
    #[arg(long, value_delimiter = ',')]
    pub clusters: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// SVM regularizer λ.
    Reg,
    /// Sampled pairs N_s.
    Samples,
    /// Largest hop K.
    MaxHop,
    /// Embedding dimension d.
    Dim,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Values to try (default: a grid per parameter).
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    pub label_rate: f64,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Also report wall-clock seconds per point (not reproducible).
    #[arg(long)]
    pub timings: bool,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[command(flatten)]
    pub logistic: LogisticArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
