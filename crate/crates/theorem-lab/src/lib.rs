//! Numerical instantiation of the two constructive invariance theorems.
//!
//! The constructions assign explicit weights, biases, and embeddings to a
//! single attention layer and then *measure* the claimed invariances instead
//! of taking them on faith:
//!
//! - the commutative assignment makes the hidden state at the `=` position an
//!   exact uniform average, so permuting the operands moves nothing;
//! - the identity assignment routes `z_0` and the operator into coordinates
//!   that a sentinel saturates, so inserting identity tokens moves nothing;
//! - counter-assignments (live positions, no sentinel, position-biased
//!   attention) demonstrate that the invariances are properties of the
//!   *operator embeddings*, not of the architecture: the same machinery with
//!   the sentinel removed measurably breaks both invariances;
//! - the trivial (zero-position) embedding shows why counter-operator data is
//!   needed at all: it is invariant for *every* operator, which makes the
//!   order-sensitive labels of `◁`/`▷`/`⊖` unrepresentable.
//!
//! All states are plain `f64` vectors. Orthogonality is exact (scaled
//! standard-basis vectors); −∞ is a finite sentinel with saturating
//! arithmetic, so saturated coordinates stay pinned instead of drifting or
//! producing NaNs under `0 · (−∞)`.

mod checks;
mod construction;
mod verify;

use cayley_algebra::AlgebraError;
use thiserror::Error;

pub use checks::{
    check_identity_insertion, check_permutation_invariance, state_deviation,
    trivial_embedding_demo, InsertionCheck, InvarianceCheck, TrivialEmbeddingReport,
};
pub use construction::{
    build_commutative_assignment, build_commutativity_counter_assignment,
    build_identity_assignment, build_identity_counter_assignment, build_trivial_assignment,
    default_context_len, ConstructedState, Layout, ProofConstruction, SigmaReading, Symbol,
    SATURATION_CUTOFF, SENTINEL,
};
pub use verify::{
    verify_theorems, TheoremVerification, VerifyConfig, COUNTER_DEVIATION_FLOOR, EXACT_TOLERANCE,
};

/// Errors produced while building constructions or measuring invariances.
#[derive(Debug, Error)]
pub enum TheoremError {
    /// Construction parameters violate the type invariants (dimensions, L).
    #[error("invalid construction: {0}")]
    Config(String),
    /// An operand sequence does not fit the construction's layout.
    #[error("sequence/layout mismatch: {0}")]
    Sequence(String),
    /// An identity-insertion position outside `0..=M`.
    #[error("insertion position {position} out of range 0..={max}")]
    BadInsertPosition { position: usize, max: usize },
    /// An attention score left the finite range the constructions guarantee.
    #[error("attention score at position {position} is not usable: {value}")]
    BadScore { position: usize, value: f64 },
    /// Label oracle failure while building the trivial-embedding report.
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
