//! End-to-end theorem verification: mains must be exact, counters must break.

use std::fmt;

use cayley_algebra::stream::substream;
use cayley_algebra::OperatorKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::checks::{
    check_identity_insertion, check_permutation_invariance, trivial_embedding_demo,
    TrivialEmbeddingReport,
};
use crate::construction::{
    build_commutative_assignment, build_commutativity_counter_assignment,
    build_identity_assignment, build_identity_counter_assignment, default_context_len,
    SigmaReading,
};
use crate::TheoremError;

/// Main-construction deviations must stay at or below this.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Counter-configurations must exceed this in at least one trial.
pub const COUNTER_DEVIATION_FLOOR: f64 = 1e-6;

/// Permutations sampled per commutativity trial.
const PERMUTATIONS_PER_TRIAL: usize = 4;

/// Parameters of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    /// Group order.
    pub n: usize,
    /// Operand count per prompt.
    pub m: usize,
    /// Random base sequences sampled per theorem.
    pub trials: usize,
    /// Root seed; sub-streams are derived per check.
    pub seed: u64,
}

/// Everything a verification run measured, plus the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremVerification {
    /// The run's parameters.
    pub config: VerifyConfig,
    /// Context window used (`16·M`).
    pub l: usize,
    /// Both σ readings produced exactly uniform `1/L` weights on both main
    /// constructions.
    pub uniform_weights_exact: bool,
    /// Max |dot| over word/position vector pairs (both layouts).
    pub orthogonality_max_dot: f64,
    /// Max permutation deviation of the commutative construction.
    pub commutative_max_deviation: f64,
    /// All commutative trials kept identical saturation masks.
    pub commutative_masks_ok: bool,
    /// Number of (sequence, permutation) comparisons performed.
    pub commutative_trials: usize,
    /// Max insertion deviation of the identity construction.
    pub identity_max_deviation: f64,
    /// All insertion trials kept identical saturation masks.
    pub identity_masks_ok: bool,
    /// Number of (sequence, insertion position) comparisons performed.
    pub identity_trials: usize,
    /// Max permutation deviation of the no-sentinel counter-configuration.
    pub counter_commutative_max_deviation: f64,
    /// Max insertion deviation of the ◁-style counter-configuration.
    pub counter_identity_max_deviation: f64,
    /// Trivial-solution demonstration at this run's (n, M).
    pub trivial: TrivialEmbeddingReport,
    /// Whether every bound above held.
    pub passed: bool,
}

fn random_nonzero_sequence(rng: &mut ChaCha12Rng, n: usize, len: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(1..n)).collect()
}

/// A sequence with at least two distinct elements, so that some permutation
/// actually rearranges content (needed for the counter-configurations to
/// have anything to break).
fn random_mixed_sequence(rng: &mut ChaCha12Rng, n: usize, len: usize) -> Vec<usize> {
    loop {
        let seq = random_nonzero_sequence(rng, n, len);
        if seq.iter().any(|&e| e != seq[0]) {
            return seq;
        }
    }
}

/// Runs the full battery: exact uniformity and orthogonality audits, the two
/// main invariance theorems over random trials, both counter-configurations,
/// and the trivial-solution demonstration.
pub fn verify_theorems(config: VerifyConfig) -> Result<TheoremVerification, TheoremError> {
    if config.trials == 0 {
        return Err(TheoremError::Config("trials must be positive".into()));
    }
    let l = default_context_len(config.m);
    let commutative = build_commutative_assignment(config.n, config.m, l)?;
    let identity = build_identity_assignment(config.n, config.m, l)?;
    let counter_commutative = build_commutativity_counter_assignment(config.n, config.m, l)?;
    let counter_identity = build_identity_counter_assignment(config.n, config.m, l)?;

    // Exact uniformity of σ(q·k_i / Σ_j q·k_j) under both readings.
    let uniform = 1.0 / l as f64;
    let mut uniform_weights_exact = true;
    let probe_sequence: Vec<usize> = (0..config.m).map(|i| 1 + i % (config.n - 1)).collect();
    for pc in [&commutative, &identity] {
        for reading in [SigmaReading::NormalizedIdentity, SigmaReading::Softmax] {
            let weights = pc
                .clone()
                .with_sigma(reading)
                .attention_weights(&probe_sequence, OperatorKind::Plus)?;
            uniform_weights_exact &= weights.iter().all(|&w| w == uniform);
        }
    }

    let orthogonality_max_dot = commutative
        .orthogonality_audit()
        .max(identity.orthogonality_audit());

    // Theorem 1: permutation invariance, exact under the main assignment.
    let mut rng = ChaCha12Rng::seed_from_u64(substream(config.seed, "theorems.commutative"));
    let mut commutative_max_deviation = 0.0f64;
    let mut commutative_masks_ok = true;
    let mut commutative_trials = 0usize;
    for _ in 0..config.trials {
        let sequence = random_nonzero_sequence(&mut rng, config.n, config.m);
        let perm_seed = rng.random_range(0..u64::MAX);
        let check =
            check_permutation_invariance(&commutative, &sequence, PERMUTATIONS_PER_TRIAL, perm_seed)?;
        commutative_max_deviation = commutative_max_deviation.max(check.max_deviation);
        commutative_masks_ok &= check.masks_identical;
        commutative_trials += check.permutations_checked;
    }

    // Theorem 2: identity insertion at every position, exact under the main
    // assignment.
    let mut rng = ChaCha12Rng::seed_from_u64(substream(config.seed, "theorems.identity"));
    let mut identity_max_deviation = 0.0f64;
    let mut identity_masks_ok = true;
    let mut identity_trials = 0usize;
    for _ in 0..config.trials {
        let sequence = random_nonzero_sequence(&mut rng, config.n, config.m);
        for position in 0..=sequence.len() {
            let check = check_identity_insertion(&identity, &sequence, position)?;
            identity_max_deviation = identity_max_deviation.max(check.deviation);
            identity_masks_ok &= check.masks_identical;
            identity_trials += 1;
        }
    }

    // Counter-configurations: the same checks must register macroscopic
    // deviations once the sentinel is gone and attention is position-biased.
    let mut rng = ChaCha12Rng::seed_from_u64(substream(config.seed, "theorems.counter"));
    let mut counter_commutative_max_deviation = 0.0f64;
    let mut counter_identity_max_deviation = 0.0f64;
    let counter_trials = config.trials.clamp(8, 64);
    for _ in 0..counter_trials {
        let sequence = random_mixed_sequence(&mut rng, config.n, config.m);
        let perm_seed = rng.random_range(0..u64::MAX);
        let check = check_permutation_invariance(
            &counter_commutative,
            &sequence,
            PERMUTATIONS_PER_TRIAL,
            perm_seed,
        )?;
        counter_commutative_max_deviation =
            counter_commutative_max_deviation.max(check.max_deviation);
        for position in 0..=sequence.len() {
            let check = check_identity_insertion(&counter_identity, &sequence, position)?;
            counter_identity_max_deviation = counter_identity_max_deviation.max(check.deviation);
        }
    }

    let trivial = trivial_embedding_demo(config.n, config.m)?;

    let passed = uniform_weights_exact
        && orthogonality_max_dot <= EXACT_TOLERANCE
        && commutative_max_deviation <= EXACT_TOLERANCE
        && commutative_masks_ok
        && identity_max_deviation <= EXACT_TOLERANCE
        && identity_masks_ok
        && counter_commutative_max_deviation > COUNTER_DEVIATION_FLOOR
        && counter_identity_max_deviation > COUNTER_DEVIATION_FLOOR
        && trivial.max_permutation_deviation <= EXACT_TOLERANCE
        && trivial
            .label_inconsistencies
            .get(&OperatorKind::Left)
            .is_some_and(|&c| c >= 1);

    Ok(TheoremVerification {
        config,
        l,
        uniform_weights_exact,
        orthogonality_max_dot,
        commutative_max_deviation,
        commutative_masks_ok,
        commutative_trials,
        identity_max_deviation,
        identity_masks_ok,
        identity_trials,
        counter_commutative_max_deviation,
        counter_identity_max_deviation,
        trivial,
        passed,
    })
}

impl fmt::Display for TheoremVerification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "theorem verification: n={} M={} L={} trials={} seed={}",
            self.config.n, self.config.m, self.l, self.config.trials, self.config.seed
        )?;
        writeln!(
            f,
            "[{}] attention weights exactly 1/L under both sigma readings",
            verdict(self.uniform_weights_exact)
        )?;
        writeln!(
            f,
            "[{}] orthogonality audit: max |dot| = {:.3e} (tolerance {:.0e})",
            verdict(self.orthogonality_max_dot <= EXACT_TOLERANCE),
            self.orthogonality_max_dot,
            EXACT_TOLERANCE
        )?;
        writeln!(
            f,
            "[{}] commutative invariance: max deviation {:.3e} over {} permutation trials (masks {})",
            verdict(self.commutative_max_deviation <= EXACT_TOLERANCE && self.commutative_masks_ok),
            self.commutative_max_deviation,
            self.commutative_trials,
            if self.commutative_masks_ok { "identical" } else { "DIVERGED" }
        )?;
        writeln!(
            f,
            "[{}] identity insertion: max deviation {:.3e} over {} insertion trials (masks {})",
            verdict(self.identity_max_deviation <= EXACT_TOLERANCE && self.identity_masks_ok),
            self.identity_max_deviation,
            self.identity_trials,
            if self.identity_masks_ok { "identical" } else { "DIVERGED" }
        )?;
        writeln!(
            f,
            "[{}] counter-configurations break invariance: permutation {:.3e}, insertion {:.3e} (floor {:.0e})",
            verdict(
                self.counter_commutative_max_deviation > COUNTER_DEVIATION_FLOOR
                    && self.counter_identity_max_deviation > COUNTER_DEVIATION_FLOOR
            ),
            self.counter_commutative_max_deviation,
            self.counter_identity_max_deviation,
            COUNTER_DEVIATION_FLOOR
        )?;
        writeln!(
            f,
            "[{}] trivial embedding: deviation {:.3e} for all operators, {} unrepresentable ◁ pair(s)",
            verdict(
                self.trivial.max_permutation_deviation <= EXACT_TOLERANCE
                    && self.trivial.label_inconsistencies.get(&OperatorKind::Left).is_some_and(|&c| c >= 1)
            ),
            self.trivial.max_permutation_deviation,
            self.trivial
                .label_inconsistencies
                .get(&OperatorKind::Left)
                .copied()
                .unwrap_or(0)
        )?;
        for line in &self.trivial.lines {
            writeln!(f, "    {line}")?;
        }
        write!(f, "overall: {}", verdict(self.passed))
    }
}
