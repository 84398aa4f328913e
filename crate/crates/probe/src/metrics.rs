//! The structure metrics and the probe-set types they operate on.

use cayley_algebra::OperatorKind;
use cayley_model::LayerTrace;

use crate::ProbeError;

/// Traces of several orderings of one operand multiset under one operator,
/// all captured from the same checkpoint (the builders guarantee this by
/// running every variant through one parameter set).
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationProbeSet {
    /// Operator the prompts used.
    pub operator: OperatorKind,
    /// The shared multiset, in sorted order.
    pub base: Vec<usize>,
    /// Sampled distinct orderings; the first is the originally drawn one.
    pub variants: Vec<Vec<usize>>,
    /// One trace per variant, index-aligned with `variants`.
    pub traces: Vec<LayerTrace>,
}

impl PermutationProbeSet {
    /// Summed per-coordinate standard deviation of this set at `layer`.
    pub fn s_std(&self, layer: usize) -> Result<f64, ProbeError> {
        s_std(&self.traces, layer)
    }
}

/// Traces of a base sequence and all of its `z_0` insertion variants under
/// one operator, from one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityProbeSet {
    /// Operator the prompts used.
    pub operator: OperatorKind,
    /// The `z_0`-free base sequence.
    pub base: Vec<usize>,
    /// Trace of the base sequence (`s̄`).
    pub base_trace: LayerTrace,
    /// The insertion variants, one per position `0..=M`.
    pub variants: Vec<Vec<usize>>,
    /// One trace per variant, index-aligned with `variants`.
    pub traces: Vec<LayerTrace>,
}

impl IdentityProbeSet {
    /// Summed absolute distance of the variant traces to the base trace at
    /// `layer`.
    pub fn s_dist(&self, layer: usize) -> Result<f64, ProbeError> {
        s_dist(&self.base_trace, &self.traces, layer)
    }
}

/// Extracts the `layer` snapshot of every trace, validating presence and a
/// single common dimension.
fn layer_rows(
    traces: &[LayerTrace],
    layer: usize,
) -> Result<Vec<&[f64]>, ProbeError> {
    let mut rows: Vec<&[f64]> = Vec::with_capacity(traces.len());
    for trace in traces {
        let row = trace
            .snapshots
            .get(layer)
            .ok_or(ProbeError::LayerOutOfRange {
                layer,
                available: trace.snapshots.len(),
            })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(ProbeError::DimensionMismatch {
                    left: first.len(),
                    right: row.len(),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Σ_k std over traces of coordinate k at snapshot `layer` — the summed
/// element-wise population standard deviation. Needs at least two traces.
///
/// Computed with Welford's single-pass recurrence per coordinate (the test
/// oracle recomputes it with the naive two-pass formula).
pub fn s_std(traces: &[LayerTrace], layer: usize) -> Result<f64, ProbeError> {
    if traces.len() < 2 {
        return Err(ProbeError::TooFewTraces(traces.len()));
    }
    let rows = layer_rows(traces, layer)?;
    let dim = rows[0].len();
    let mut total = 0.0f64;
    for k in 0..dim {
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for (i, row) in rows.iter().enumerate() {
            let delta = row[k] - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (row[k] - mean);
        }
        total += (m2 / rows.len() as f64).sqrt();
    }
    Ok(total)
}

/// Σ_k Σ_i |{s_i}_k − {s̄}_k| at snapshot `layer`: the summed absolute
/// distance of every trace to the base trace.
pub fn s_dist(base: &LayerTrace, traces: &[LayerTrace], layer: usize) -> Result<f64, ProbeError> {
    let base_row = base
        .snapshots
        .get(layer)
        .ok_or(ProbeError::LayerOutOfRange {
            layer,
            available: base.snapshots.len(),
        })?;
    let rows = layer_rows(traces, layer)?;
    if let Some(first) = rows.first() {
        if first.len() != base_row.len() {
            return Err(ProbeError::DimensionMismatch {
                left: base_row.len(),
                right: first.len(),
            });
        }
    }
    let mut total = 0.0f64;
    for row in rows {
        for (x, b) in row.iter().zip(base_row) {
            total += (x - b).abs();
        }
    }
    Ok(total)
}

/// Validates that the `+` set and the order-sensitive set probe the same
/// inputs, returning a description of the first mismatch.
fn matched_inputs(
    plus_operator: OperatorKind,
    plus_base: &[usize],
    plus_variants: &[Vec<usize>],
    other_operator: OperatorKind,
    other_base: &[usize],
    other_variants: &[Vec<usize>],
) -> Result<(), ProbeError> {
    if plus_operator != OperatorKind::Plus {
        return Err(ProbeError::MismatchedInputs(format!(
            "first probe set must use +, got {plus_operator}"
        )));
    }
    if !matches!(
        other_operator,
        OperatorKind::Ominus | OperatorKind::Left | OperatorKind::Right
    ) {
        return Err(ProbeError::MismatchedInputs(format!(
            "comparison operator must be one of om/lt/rt, got {other_operator}"
        )));
    }
    if plus_base != other_base {
        return Err(ProbeError::MismatchedInputs(format!(
            "base inputs differ: {plus_base:?} vs {other_base:?}"
        )));
    }
    if plus_variants != other_variants {
        return Err(ProbeError::MismatchedInputs(
            "variant sequences differ between operators".to_string(),
        ));
    }
    Ok(())
}

/// S_com at `layer`: `s_std` of the `+` permutation set minus `s_std` of the
/// order-sensitive operator's set over the same operand sequences. Negative
/// values mean the `+` representation varies less under permutation — the
/// commutative structure is realized in the hidden states.
pub fn s_com(
    plus: &PermutationProbeSet,
    other: &PermutationProbeSet,
    layer: usize,
) -> Result<f64, ProbeError> {
    matched_inputs(
        plus.operator,
        &plus.base,
        &plus.variants,
        other.operator,
        &other.base,
        &other.variants,
    )?;
    Ok(plus.s_std(layer)? - other.s_std(layer)?)
}

/// S_ide at `layer`: `s_dist` of the `+` identity set minus `s_dist` of the
/// order-sensitive operator's set over the same base sequence and insertion
/// positions. Negative values mean `z_0` insertions move the `+`
/// representation less.
pub fn s_ide(
    plus: &IdentityProbeSet,
    other: &IdentityProbeSet,
    layer: usize,
) -> Result<f64, ProbeError> {
    matched_inputs(
        plus.operator,
        &plus.base,
        &plus.variants,
        other.operator,
        &other.base,
        &other.variants,
    )?;
    Ok(plus.s_dist(layer)? - other.s_dist(layer)?)
}
