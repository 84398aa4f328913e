//! The run-configuration file: a TOML mirror of every command-line flag.
//!
//! Resolution order is fixed: built-in defaults, then values from the
//! `--config` file, then explicit flags. Every artifact-writing subcommand
//! serializes the fully resolved configuration back to `config.toml` in its
//! output directory, and that file is itself a valid `--config` input, so an
//! output directory always names the exact settings that produced it.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A 64-bit seed. Serializes as a hex string (`"0x2a"`) and deserializes
/// from an integer or a hex/decimal string, because TOML integers are signed
/// and derived stream seeds routinely exceed `i64::MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{:#x}", self.0))
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SeedVisitor;
        impl Visitor<'_> for SeedVisitor {
            type Value = Seed;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an unsigned integer or a decimal/hex string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Seed, E> {
                Ok(Seed(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Seed, E> {
                u64::try_from(v)
                    .map(Seed)
                    .map_err(|_| E::custom(format!("seed must be non-negative, got {v}")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Seed, E> {
                let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                    Some(hex) => u64::from_str_radix(hex, 16),
                    None => v.parse::<u64>(),
                };
                parsed
                    .map(Seed)
                    .map_err(|_| E::custom(format!("`{v}` is not a valid seed")))
            }
        }
        deserializer.deserialize_any(SeedVisitor)
    }
}

/// Provenance stamp written into every resolved `config.toml`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    /// Subcommand that produced the directory.
    pub command: String,
    /// Always `true`: every subcommand is bit-for-bit deterministic given
    /// its resolved configuration. The `--deterministic` flag asserts this;
    /// it changes nothing.
    pub deterministic: bool,
    /// Tool version the artifacts were written by.
    pub version: String,
}

/// Architecture settings (`[model]` section); unset fields fall back to the
/// desk-scale defaults.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Transformer blocks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    /// Attention heads per block.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heads: Option<usize>,
    /// Residual-stream width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_model: Option<usize>,
    /// MLP hidden width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_ff: Option<usize>,
    /// Maximum sequence length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context_len: Option<usize>,
}

/// Optimizer settings (`[train]` section); unset fields fall back to the
/// trainer defaults.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Adam step size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    /// Sequences per optimization step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    /// Hard cap on optimization steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Steps between evaluations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_interval: Option<usize>,
    /// Adam first-moment decay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    /// Adam second-moment decay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    /// Adam denominator fuzz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Decoupled weight decay (0 disables).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    /// Early stop after this many consecutive at-threshold evaluations
    /// (0 disables).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop_evals: Option<usize>,
    /// Early-stop train-accuracy threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop_threshold: Option<f64>,
    /// Train with full next-token loss over every position (ablation).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_sequence_loss: Option<bool>,
}

/// Every setting any subcommand reads. All fields are optional in a config
/// file; each subcommand resolves the subset it uses and records exactly
/// that subset in its output `config.toml`.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Written by the tool into resolved configs; ignored on input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    /// Group modulus of Z_n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Operand count M of the chained equations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Per-category training rows K.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_train: Option<usize>,
    /// Per-category test rows K.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_test: Option<usize>,
    /// Sweep training scales, strictly ascending.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_values: Option<Vec<usize>>,
    /// Arrangements sampled per commutativity family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perms_per_family: Option<usize>,
    /// Root seed; all randomness derives from it via named sub-streams.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<Seed>,
    /// Sweep dataset seed (defaults to `seed`), so scales share families.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<Seed>,
    /// Random trials per theorem check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Dataset directory (written by `gen`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Checkpoint file (written by `train`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Sweep directory holding `k<K>/model.ckpt` checkpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<PathBuf>,
    /// Evaluation split: `train`, `test`, or `both`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    /// Evaluation batch size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    /// Probe base inputs per family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_inputs: Option<usize>,
    /// Distinct orderings probed per permutation family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_permutations: Option<usize>,
    /// Probe read-out position (default: the `=` token).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    /// Also render heatmap SVGs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<bool>,
    /// Architecture overrides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    /// Optimizer overrides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
}

impl RunConfig {
    /// Reads and parses a config file, rejecting unknown keys.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    /// Renders the resolved configuration as TOML.
    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string_pretty(self).context("serializing resolved config")
    }
}
