//! Command-line surface: one subcommand per pipeline stage.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Operator algebra on Z_n: leakage-controlled datasets, tiny-transformer
/// training, constructive-theorem verification, and hidden-state probes.
#[derive(Debug, Parser)]
#[command(name = "cayley", version, about)]
pub struct Cli {
    /// TOML run-config file; explicit flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Assert bit-for-bit deterministic execution. Every subcommand is
    /// deterministic regardless; the flag is recorded in resolved configs.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

/// The pipeline stages.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a leakage-controlled seven-category dataset.
    Gen(GenArgs),
    /// Train one model on a generated dataset.
    Train(TrainArgs),
    /// Train one model per dataset scale K and tabulate test accuracy.
    Sweep(SweepArgs),
    /// Evaluate a checkpoint on a dataset, per category.
    Eval(EvalArgs),
    /// Probe sweep checkpoints for commutativity/identity structure.
    Probe(ProbeArgs),
    /// Verify the constructive invariance theorems numerically.
    VerifyTheorems(VerifyArgs),
    /// Audit a dataset directory for split-guarantee violations.
    Audit(AuditArgs),
}

/// Architecture flags shared by `train` and `sweep`.
#[derive(Debug, Default, Args)]
pub struct ModelFlags {
    /// Transformer blocks.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Attention heads per block.
    #[arg(long)]
    pub heads: Option<usize>,
    /// Residual-stream width.
    #[arg(long)]
    pub d_model: Option<usize>,
    /// MLP hidden width.
    #[arg(long)]
    pub d_ff: Option<usize>,
    /// Maximum sequence length.
    #[arg(long)]
    pub context_len: Option<usize>,
}

/// Optimizer flags shared by `train` and `sweep`.
#[derive(Debug, Default, Args)]
pub struct TrainFlags {
    /// Adam step size.
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    /// Sequences per optimization step.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Hard cap on optimization steps.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Steps between evaluations.
    #[arg(long)]
    pub eval_interval: Option<usize>,
    /// Adam first-moment decay.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Adam second-moment decay.
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Adam denominator fuzz.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Decoupled weight decay (0 disables).
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Early stop after this many consecutive at-threshold evals (0 = off).
    #[arg(long)]
    pub early_stop_evals: Option<usize>,
    /// Early-stop train-accuracy threshold.
    #[arg(long)]
    pub early_stop_threshold: Option<f64>,
    /// Train with full next-token loss over every position (ablation).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub full_sequence_loss: Option<bool>,
}

/// `cayley gen`
#[derive(Debug, Args)]
pub struct GenArgs {
    /// Group modulus of Z_n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Operand count M of the chained equations.
    #[arg(long)]
    pub m: Option<usize>,
    /// Per-category training rows K.
    #[arg(long)]
    pub k_train: Option<usize>,
    /// Per-category test rows K (default: same as --k-train).
    #[arg(long)]
    pub k_test: Option<usize>,
    /// Arrangements sampled per commutativity family.
    #[arg(long)]
    pub perms_per_family: Option<usize>,
    /// Root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: out/dataset).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `cayley train`
#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory produced by `gen`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Root seed (weight init and batch order derive from it).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: out/train).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

/// `cayley sweep`
#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Group modulus of Z_n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Operand count M.
    #[arg(long)]
    pub m: Option<usize>,
    /// Training scales, ascending (e.g. 300,1000,3000).
    #[arg(long, value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
    /// Per-category test rows, fixed across the sweep.
    #[arg(long)]
    pub k_test: Option<usize>,
    /// Arrangements sampled per commutativity family.
    #[arg(long)]
    pub perms_per_family: Option<usize>,
    /// Dataset seed shared by every scale (default: --seed).
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Root training seed, shared by every scale.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: out/sweep).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

/// Evaluation split selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    /// Training split only.
    Train,
    /// Test split only.
    Test,
    /// Both splits.
    Both,
}

/// `cayley eval`
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint file written by `train` or `sweep`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Dataset directory produced by `gen`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Which split(s) to evaluate.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Evaluation batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Optional output directory for eval.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `cayley probe`
#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Directory holding `k<K>/model.ckpt` checkpoints (a `sweep` output).
    #[arg(long)]
    pub checkpoints: Option<PathBuf>,
    /// Operand count of the probe prompts (default: the checkpoints' M).
    #[arg(long)]
    pub m: Option<usize>,
    /// Base inputs sampled per probe family.
    #[arg(long)]
    pub base_inputs: Option<usize>,
    /// Distinct orderings probed per permutation family.
    #[arg(long)]
    pub max_permutations: Option<usize>,
    /// Probe seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Read hidden states at this position instead of the `=` token.
    #[arg(long)]
    pub position: Option<usize>,
    /// Render heatmap SVGs next to the CSVs (default: true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
    /// Output directory (default: out/probe).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `cayley verify-theorems`
#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Group modulus of Z_n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Operand count M.
    #[arg(long)]
    pub m: Option<usize>,
    /// Random trials per theorem check.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Trial seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optional output directory for the verification report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `cayley audit`
#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Dataset directory produced by `gen`.
    #[arg(long)]
    pub data: Option<PathBuf>,
}
