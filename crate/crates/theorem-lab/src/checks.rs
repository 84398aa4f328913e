//! Invariance measurements over constructed states, plus the trivial-solution
//! demonstration.

use std::collections::BTreeMap;

use cayley_algebra::{label_for, CanonicalMap, GroupElement, OperatorKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::construction::{ConstructedState, ProofConstruction};
use crate::TheoremError;

/// Result of a permutation-invariance measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceCheck {
    /// Max L∞ distance between mutually finite coordinates of the base state
    /// and any sampled permutation's state.
    pub max_deviation: f64,
    /// Whether every sampled permutation produced the same saturation mask.
    pub masks_identical: bool,
    /// How many permutations were sampled.
    pub permutations_checked: usize,
}

/// Result of an identity-insertion measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionCheck {
    /// L∞ distance between mutually finite coordinates of the base prompt's
    /// state and the inserted prompt's state.
    pub deviation: f64,
    /// Whether both prompts produced the same saturation mask.
    pub masks_identical: bool,
}

/// L∞ distance over coordinates finite in both states, plus whether the
/// saturation masks agree. Errors when the states have different dimensions
/// (states from different constructions are not comparable).
pub fn state_deviation(
    a: &ConstructedState,
    b: &ConstructedState,
) -> Result<(f64, bool), TheoremError> {
    if a.dim() != b.dim() {
        return Err(TheoremError::Sequence(format!(
            "cannot compare states of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let masks_identical = a.saturated_mask() == b.saturated_mask();
    let mut max = 0.0f64;
    for c in 0..a.dim() {
        if !a.saturated_mask()[c] && !b.saturated_mask()[c] {
            max = max.max((a.values()[c] - b.values()[c]).abs());
        }
    }
    Ok((max, masks_identical))
}

/// Shared permutation-deviation loop: the base state against `num` shuffles
/// of the operand sequence under `operator`.
fn permutation_deviation(
    pc: &ProofConstruction,
    sequence: &[usize],
    operator: OperatorKind,
    num_permutations: usize,
    rng_seed: u64,
) -> Result<InvarianceCheck, TheoremError> {
    let base = pc.state_at_equals(sequence, operator)?;
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut max_deviation = 0.0f64;
    let mut masks_identical = true;
    for _ in 0..num_permutations {
        let mut permuted = sequence.to_vec();
        permuted.shuffle(&mut rng);
        let state = pc.state_at_equals(&permuted, operator)?;
        let (deviation, masks) = state_deviation(&base, &state)?;
        max_deviation = max_deviation.max(deviation);
        masks_identical &= masks;
    }
    Ok(InvarianceCheck {
        max_deviation,
        masks_identical,
        permutations_checked: num_permutations,
    })
}

/// Theorem 1 measurement: the `+`-prompt state of `sequence` against
/// `num_permutations` sampled permutations. Under the main commutative
/// assignment the deviation is exactly zero and the masks agree; under the
/// counter-assignment the deviation is macroscopic.
///
/// The sequence must consist of non-zero elements (the theorem's setting) and
/// contain at least two operands.
pub fn check_permutation_invariance(
    pc: &ProofConstruction,
    sequence: &[usize],
    num_permutations: usize,
    rng_seed: u64,
) -> Result<InvarianceCheck, TheoremError> {
    if sequence.len() < 2 {
        return Err(TheoremError::Sequence(
            "permutation check needs at least two operands".into(),
        ));
    }
    if sequence.contains(&0) {
        return Err(TheoremError::Sequence(
            "permutation check operates on non-zero elements".into(),
        ));
    }
    permutation_deviation(pc, sequence, OperatorKind::Plus, num_permutations, rng_seed)
}

/// Theorem 2 measurement: the `+`-prompt state of `sequence` (length M,
/// 2M tokens) against the prompt with `z_0` and one extra operator inserted
/// at `insert_position ∈ 0..=M` (2M+2 tokens). Under the main identity
/// assignment the deviation is exactly zero and the masks agree.
pub fn check_identity_insertion(
    pc: &ProofConstruction,
    sequence: &[usize],
    insert_position: usize,
) -> Result<InsertionCheck, TheoremError> {
    if sequence.is_empty() {
        return Err(TheoremError::Sequence("empty operand sequence".into()));
    }
    if sequence.contains(&0) {
        return Err(TheoremError::Sequence(
            "insertion check starts from a z_0-free base sequence".into(),
        ));
    }
    if insert_position > sequence.len() {
        return Err(TheoremError::BadInsertPosition {
            position: insert_position,
            max: sequence.len(),
        });
    }
    let base = pc.state_at_equals(sequence, OperatorKind::Plus)?;
    let mut inserted = sequence.to_vec();
    inserted.insert(insert_position, 0);
    let after = pc.state_at_equals(&inserted, OperatorKind::Plus)?;
    let (deviation, masks_identical) = state_deviation(&base, &after)?;
    Ok(InsertionCheck {
        deviation,
        masks_identical,
    })
}

/// Outcome of the trivial-solution demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrivialEmbeddingReport {
    /// Group order the demo ran on.
    pub n: usize,
    /// Operand count used for the permutation sweep.
    pub m: usize,
    /// Max deviation over all five operators and sampled permutations —
    /// exactly zero: the degenerate embedding is order-blind for everything.
    pub max_permutation_deviation: f64,
    /// Ordered pairs `(a, b)`/`(b, a)` whose states collapsed to the same
    /// vector during the M=2 enumeration.
    pub collapsed_pairs: usize,
    /// Per-operator count of collapsed pairs that *require different
    /// labels* — representability failures. Positive for `⊖`, `◁`, `▷`;
    /// zero for `+` and `⊕`.
    pub label_inconsistencies: BTreeMap<OperatorKind, usize>,
    /// Human-readable summary, one finding per line.
    pub lines: Vec<String>,
}

/// Builds the degenerate "trivial solution" embedding (zero position
/// embeddings, `z_0` embedded as zero) and demonstrates both of its faces:
/// permutation invariance holds for **all** operators, and exactly because of
/// that, the order-sensitive labels of `⊖`/`◁`/`▷` cannot be represented —
/// pairs `(a, b)` and `(b, a)` collapse to one state but need different
/// answers. This is why the counter-operator portions of the dataset exist.
pub fn trivial_embedding_demo(n: usize, m: usize) -> Result<TrivialEmbeddingReport, TheoremError> {
    let l = crate::construction::default_context_len(m.max(2));
    let pc = crate::construction::build_trivial_assignment(n, m.max(2), l)?;

    // Face 1: with zero position embeddings every prompt state is a pure
    // multiset average, so permuting operands moves nothing for any operator.
    let mut rng = ChaCha12Rng::seed_from_u64(cayley_algebra::stream::substream(0, "theorems.trivial-demo"));
    let mut max_permutation_deviation = 0.0f64;
    for operator in OperatorKind::ALL {
        for _ in 0..8 {
            let sequence: Vec<usize> = (0..m.max(2)).map(|_| rng.random_range(0..n)).collect();
            let seed = rng.random_range(0..u64::MAX);
            let check = permutation_deviation(&pc, &sequence, operator, 4, seed)?;
            max_permutation_deviation = max_permutation_deviation.max(check.max_deviation);
        }
    }

    // Face 2: enumerate ordered pairs at M=2. Collapsed states with differing
    // labels are representability failures.
    let mut map = CanonicalMap::new(n, 2, cayley_algebra::stream::substream(0, "theorems.trivial-map"));
    let mut label_inconsistencies = BTreeMap::new();
    let mut collapsed_pairs = 0usize;
    for operator in OperatorKind::ALL {
        let mut inconsistent = 0usize;
        for a in 0..n {
            for b in (a + 1)..n {
                let forward = pc.state_at_equals(&[a, b], operator)?;
                let backward = pc.state_at_equals(&[b, a], operator)?;
                let (deviation, masks) = state_deviation(&forward, &backward)?;
                if deviation == 0.0 && masks {
                    collapsed_pairs += 1;
                    let ea = GroupElement::new(a, n)?;
                    let eb = GroupElement::new(b, n)?;
                    map.insert_operands(&[ea, eb])?;
                    let label_fwd = label_for(operator, &[ea, eb], Some(&map))?;
                    let label_bwd = label_for(operator, &[eb, ea], Some(&map))?;
                    if label_fwd != label_bwd {
                        inconsistent += 1;
                    }
                }
            }
        }
        label_inconsistencies.insert(operator, inconsistent);
    }

    let mut lines = vec![format!(
        "trivial embedding (zero positions, zero z_0) on Z_{n}: max permutation deviation {max_permutation_deviation:.3e} across all five operators"
    )];
    for (operator, count) in &label_inconsistencies {
        if *count > 0 {
            lines.push(format!(
                "operator {operator}: {count} collapsed operand pair(s) demand different labels — unrepresentable under the trivial embedding"
            ));
        } else {
            lines.push(format!(
                "operator {operator}: all collapsed pairs share one label — representable even under the trivial embedding"
            ));
        }
    }
    Ok(TrivialEmbeddingReport {
        n,
        m: m.max(2),
        max_permutation_deviation,
        collapsed_pairs,
        label_inconsistencies,
        lines,
    })
}
