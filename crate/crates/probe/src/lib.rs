//! Hidden-state structure metrics over trained checkpoints.
//!
//! A model that has internalized commutativity should map the orderings of
//! one operand multiset to nearby hidden states when the operator is
//! commutative (`+`) but not when it is order-sensitive (`⊖`, `◁`, `▷`); a
//! model that has internalized the identity should absorb `z_0` insertions
//! the same way. This crate measures both effects layer by layer:
//!
//! * [`s_std`] — summed element-wise (population) standard deviation across
//!   the traces of permuted inputs; [`s_dist`] — summed absolute distance of
//!   insertion-variant traces to the base trace.
//! * [`s_com`] / [`s_ide`] — the difference of those between `+` and one
//!   order-sensitive operator on the *same* operand sequences; negative
//!   values mean the `+` representation is the more invariant one.
//! * [`build_heatmaps`] — the six matrices (each metric against `⊖`, `◁`,
//!   `▷`) across a sweep of dataset scales, with rows comparable because the
//!   probe inputs are sampled once from a fixed seed, plus CSV and SVG
//!   export.
//!
//! Traces are read at the `=` position (where the answer is predicted); an
//! explicit position override exists for exploration. All metrics use the
//! population standard deviation, declared as [`STD_CONVENTION`] in output
//! metadata.

mod family;
mod heatmap;
mod metrics;

pub use family::{
    build_identity_sets, build_permutation_sets, insertion_variants, sample_probe_inputs,
    ProbeConfig, ProbeInputs, DEFAULT_BASE_INPUTS, DEFAULT_MAX_PERMUTATIONS,
};
pub use heatmap::{
    build_heatmaps, probe_checkpoint, CheckpointProbe, HeatmapMatrix, MetricKind,
    PROBED_OPERATORS,
};
pub use metrics::{s_com, s_dist, s_ide, s_std, IdentityProbeSet, PermutationProbeSet};

/// Standard-deviation convention used throughout, recorded in metadata.
pub const STD_CONVENTION: &str = "population";

/// Errors surfaced by metric evaluation and probe construction.
#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    /// Invalid probe configuration or usage.
    #[error("invalid probe configuration: {0}")]
    Config(String),
    /// `s_std` is undefined for fewer than two traces.
    #[error("s_std needs at least 2 traces, got {0}")]
    TooFewTraces(usize),
    /// A trace has no snapshot at the requested layer.
    #[error("layer {layer} out of range: traces carry {available} snapshots")]
    LayerOutOfRange {
        /// Requested snapshot index.
        layer: usize,
        /// Snapshots actually present.
        available: usize,
    },
    /// Traces of different width cannot be compared.
    #[error("trace dimension mismatch: {left} vs {right}")]
    DimensionMismatch {
        /// Dimension of the first trace.
        left: usize,
        /// Dimension of the offending trace.
        right: usize,
    },
    /// `s_com`/`s_ide` were handed probe sets that do not share inputs.
    #[error("probe sets are not comparable: {0}")]
    MismatchedInputs(String),
    /// Checkpoints in one sweep must share the architecture.
    #[error("checkpoint mismatch: {0}")]
    ConfigMismatch(String),
    /// Error from the model layer (tokenization, forward pass).
    #[error(transparent)]
    Model(#[from] cayley_model::ModelError),
}
