//! Probe-input sampling and trace capture.
//!
//! The same operand sequences are reused across all probed operators (only
//! the operator token changes), which is what makes the metric differences
//! attributable to the operator rather than to the inputs.

use cayley_algebra::stream::substream;
use cayley_algebra::OperatorKind;
use cayley_model::{forward_at, forward_batch_traced, LayerTrace, Params, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::{IdentityProbeSet, PermutationProbeSet};
use crate::ProbeError;

/// Base inputs sampled per operator by default.
pub const DEFAULT_BASE_INPUTS: usize = 32;

/// Cap on distinct permutations per base input by default.
pub const DEFAULT_MAX_PERMUTATIONS: usize = 8;

/// Sequences per forward batch during trace capture (bounds graph memory).
const PROBE_BATCH: usize = 64;

/// Shuffle attempts per base input when collecting distinct permutations.
const SHUFFLE_ATTEMPTS: usize = 64;

/// What to probe and how, recorded next to every probe artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Group order.
    pub n: usize,
    /// Operand count of the probed prompts.
    pub m: usize,
    /// Base inputs per operator.
    pub base_inputs: usize,
    /// Cap on distinct permutations per base input (≥ 2).
    pub max_permutations: usize,
    /// Root seed; the commutativity and identity families derive named
    /// sub-streams from it.
    pub seed: u64,
    /// Position to read traces at; `None` (the default) reads at `=`.
    pub position: Option<usize>,
}

impl ProbeConfig {
    /// The default probe family sizes at a given `(n, M, seed)`.
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            base_inputs: DEFAULT_BASE_INPUTS,
            max_permutations: DEFAULT_MAX_PERMUTATIONS,
            seed,
            position: None,
        }
    }

    /// Rejects configurations that cannot produce valid probe sets.
    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.n < 3 {
            return Err(ProbeError::Config(format!(
                "n must be at least 3 so non-constant operand multisets exist, got {}",
                self.n
            )));
        }
        if self.m < 2 {
            return Err(ProbeError::Config(format!(
                "M must be at least 2, got {}",
                self.m
            )));
        }
        if self.base_inputs == 0 {
            return Err(ProbeError::Config("base_inputs must be positive".to_string()));
        }
        if self.max_permutations < 2 {
            return Err(ProbeError::Config(format!(
                "max_permutations must be at least 2 (s_std needs two traces), got {}",
                self.max_permutations
            )));
        }
        if let Some(p) = self.position {
            // The shortest probed prompt has 2M tokens; an override must be
            // readable in every prompt.
            if p >= 2 * self.m {
                return Err(ProbeError::Config(format!(
                    "probe position {p} outside the base prompt (2M = {} tokens)",
                    2 * self.m
                )));
            }
        }
        Ok(())
    }
}

/// The sampled probe inputs, shared by every operator and checkpoint of one
/// probe run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeInputs {
    /// Group order the element indices come from.
    pub n: usize,
    /// Operand count of every base sequence.
    pub m: usize,
    /// Commutativity base sequences (non-zero elements, ≥ 2 distinct).
    pub comm_bases: Vec<Vec<usize>>,
    /// Per base: sampled distinct orderings, first entry the base itself.
    pub comm_variants: Vec<Vec<Vec<usize>>>,
    /// Identity base sequences (z_0-free).
    pub ide_bases: Vec<Vec<usize>>,
}

/// Samples the probe families from `config.seed` via the named sub-streams
/// `probe.comm` and `probe.ide`. The same config always yields the same
/// inputs, so heatmap rows computed from different checkpoints are
/// comparable.
pub fn sample_probe_inputs(config: &ProbeConfig) -> Result<ProbeInputs, ProbeError> {
    config.validate()?;
    let (n, m) = (config.n, config.m);

    let mut rng = ChaCha12Rng::seed_from_u64(substream(config.seed, "probe.comm"));
    let mut comm_bases = Vec::with_capacity(config.base_inputs);
    let mut comm_variants = Vec::with_capacity(config.base_inputs);
    for _ in 0..config.base_inputs {
        // Constant sequences have a single ordering and nothing to probe.
        let base: Vec<usize> = loop {
            let candidate: Vec<usize> = (0..m).map(|_| rng.random_range(1..n)).collect();
            if candidate.iter().any(|&e| e != candidate[0]) {
                break candidate;
            }
        };
        let mut variants = vec![base.clone()];
        let mut attempts = 0;
        while variants.len() < config.max_permutations && attempts < SHUFFLE_ATTEMPTS {
            let mut permuted = base.clone();
            permuted.shuffle(&mut rng);
            if !variants.contains(&permuted) {
                variants.push(permuted);
            }
            attempts += 1;
        }
        comm_bases.push(base);
        comm_variants.push(variants);
    }

    let mut rng = ChaCha12Rng::seed_from_u64(substream(config.seed, "probe.ide"));
    let ide_bases: Vec<Vec<usize>> = (0..config.base_inputs)
        .map(|_| (0..m).map(|_| rng.random_range(1..n)).collect())
        .collect();

    Ok(ProbeInputs {
        n,
        m,
        comm_bases,
        comm_variants,
        ide_bases,
    })
}

/// All `M+1` insertion variants of `base`: `z_0` at every position.
pub fn insertion_variants(base: &[usize]) -> Vec<Vec<usize>> {
    (0..=base.len())
        .map(|position| {
            let mut v = base.to_vec();
            v.insert(position, 0);
            v
        })
        .collect()
}

/// Token ids of the prompt `z_a op z_b op … op z_c =`.
fn prompt_ids(
    vocab: &Vocabulary,
    operands: &[usize],
    operator: OperatorKind,
) -> Result<Vec<usize>, ProbeError> {
    let op_id = vocab
        .id(operator.token())
        .ok_or_else(|| ProbeError::Config(format!("operator {operator} not in vocabulary")))?;
    let mut ids = Vec::with_capacity(2 * operands.len());
    for (i, &k) in operands.iter().enumerate() {
        if i > 0 {
            ids.push(op_id);
        }
        ids.push(vocab.element_id(k)?);
    }
    ids.push(vocab.equals_id());
    Ok(ids)
}

/// Runs every sequence (all the same operand count) through the model and
/// captures its layer trace — at `=` by default, or at `position`.
fn capture_traces(
    params: &Params,
    sequences: &[&[usize]],
    operator: OperatorKind,
    position: Option<usize>,
) -> Result<Vec<LayerTrace>, ProbeError> {
    let prompts: Vec<Vec<usize>> = sequences
        .iter()
        .map(|s| prompt_ids(&params.vocab, s, operator))
        .collect::<Result<_, _>>()?;
    match position {
        None => {
            let mut traces = Vec::with_capacity(prompts.len());
            for chunk in prompts.chunks(PROBE_BATCH) {
                let (_, mut captured) = forward_batch_traced(params, chunk, true)?;
                traces.append(&mut captured);
            }
            Ok(traces)
        }
        Some(p) => prompts
            .iter()
            .map(|ids| Ok(forward_at(params, ids, p)?.1))
            .collect(),
    }
}

fn validate_model(params: &Params, inputs: &ProbeInputs) -> Result<(), ProbeError> {
    if params.vocab.n() != inputs.n {
        return Err(ProbeError::ConfigMismatch(format!(
            "checkpoint is for Z_{}, probe inputs for Z_{}",
            params.vocab.n(),
            inputs.n
        )));
    }
    // Insertion variants occupy 2M + 2 positions.
    if params.config.context_len < 2 * inputs.m + 2 {
        return Err(ProbeError::ConfigMismatch(format!(
            "checkpoint context_len {} cannot hold M = {} probes (needs {})",
            params.config.context_len,
            inputs.m,
            2 * inputs.m + 2
        )));
    }
    Ok(())
}

/// Builds one [`PermutationProbeSet`] per commutativity base input, with all
/// traces captured from `params`.
pub fn build_permutation_sets(
    params: &Params,
    inputs: &ProbeInputs,
    operator: OperatorKind,
    position: Option<usize>,
) -> Result<Vec<PermutationProbeSet>, ProbeError> {
    validate_model(params, inputs)?;
    // Flatten across bases so forward batches run full.
    let flat: Vec<&[usize]> = inputs
        .comm_variants
        .iter()
        .flat_map(|variants| variants.iter().map(Vec::as_slice))
        .collect();
    let mut traces = capture_traces(params, &flat, operator, position)?.into_iter();
    let mut sets = Vec::with_capacity(inputs.comm_bases.len());
    for (base, variants) in inputs.comm_bases.iter().zip(&inputs.comm_variants) {
        let set_traces: Vec<LayerTrace> = traces.by_ref().take(variants.len()).collect();
        let mut sorted = base.clone();
        sorted.sort_unstable();
        sets.push(PermutationProbeSet {
            operator,
            base: sorted,
            variants: variants.clone(),
            traces: set_traces,
        });
    }
    Ok(sets)
}

/// Builds one [`IdentityProbeSet`] per identity base input, with the base
/// trace and all `M+1` insertion-variant traces captured from `params`.
pub fn build_identity_sets(
    params: &Params,
    inputs: &ProbeInputs,
    operator: OperatorKind,
    position: Option<usize>,
) -> Result<Vec<IdentityProbeSet>, ProbeError> {
    validate_model(params, inputs)?;
    let bases: Vec<&[usize]> = inputs.ide_bases.iter().map(Vec::as_slice).collect();
    let base_traces = capture_traces(params, &bases, operator, position)?;

    let all_variants: Vec<Vec<Vec<usize>>> =
        inputs.ide_bases.iter().map(|b| insertion_variants(b)).collect();
    let flat: Vec<&[usize]> = all_variants
        .iter()
        .flat_map(|variants| variants.iter().map(Vec::as_slice))
        .collect();
    let mut traces = capture_traces(params, &flat, operator, position)?.into_iter();

    let mut sets = Vec::with_capacity(inputs.ide_bases.len());
    for ((base, variants), base_trace) in
        inputs.ide_bases.iter().zip(all_variants).zip(base_traces)
    {
        let set_traces: Vec<LayerTrace> = traces.by_ref().take(variants.len()).collect();
        sets.push(IdentityProbeSet {
            operator,
            base: base.clone(),
            base_trace,
            variants,
            traces: set_traces,
        });
    }
    Ok(sets)
}
