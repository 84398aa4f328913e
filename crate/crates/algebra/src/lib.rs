//! Exact semantics of the cyclic group `Z_n` and the five sequence operators
//! used throughout the workspace: modular addition `+`, the relabeled
//! commutative operator `⊕` (token `op`), the cyclic-walk counter `⊖`
//! (token `om`), and the projections `◁` / `▷` (tokens `lt` / `rt`).
//!
//! Everything in this crate is pure and deterministic; it is the label oracle
//! for every generated dataset instance and the ground truth that training,
//! auditing, and the theorem verifier all check against.

mod element;
mod oplus;
mod ops;
pub mod stream;

pub use element::{CountValue, GroupElement, LabelToken, OperatorKind, ResultToken};
pub use oplus::{oplus_eval, CanonicalMap};
pub use ops::{label_for, left_fold, mod_add_chain, ominus_chain, ominus_pair, right_fold};

use thiserror::Error;

/// Errors produced by the algebra oracle.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    /// Element index out of range for its modulus, or modulus < 2.
    #[error("invalid element: index {index} not in [0, {modulus}) or modulus < 2")]
    InvalidElement { index: usize, modulus: usize },
    /// Two operands (or an operand and a mapping) disagree on the modulus.
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: usize, right: usize },
    /// An operation that needs at least one operand received none.
    #[error("empty operand list")]
    EmptyOperandList,
    /// `⊖` chains need at least two operands (there is no zero-hop walk).
    #[error("ominus chain needs at least 2 operands, got {len}")]
    ChainTooShort { len: usize },
    /// `⊕` lookup on a multiset that the canonical map was not built for.
    #[error("multiset {key:?} has no entry in the canonical ⊕ map")]
    UnmappedMultiset { key: Vec<usize> },
    /// `⊕` evaluation requested without a canonical map.
    #[error("⊕ evaluation requires a canonical map")]
    MapRequired,
}
