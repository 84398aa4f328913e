//! Leakage-controlled dataset construction for operator-algebra sequence tasks.
//!
//! This crate turns the operator definitions from `cayley-algebra` into
//! train/test corpora with *structural* leakage control:
//!
//! * **Commutativity splits** group equations into multiset families. A family
//!   is either `TrainRich` (two or more arrangements in train, none in test)
//!   or `TestHeld` (exactly one arrangement in train, the rest in test), so a
//!   model can only solve held test rows by generalizing over operand order.
//! * **Identity splits** group equations into insertion families built from a
//!   zero-free base sequence plus every possible `z_0` insertion. Test-side
//!   families keep the base in train and move the insertions to test, so test
//!   rows are solvable only by learning that `z_0` is inert.
//! * **Noncommutative controls** (`om`, `lt`, `rt`) reuse the exact operand
//!   pool of the commutativity and identity categories with labels recomputed,
//!   so any behavioural difference between operators is attributable to the
//!   operator semantics rather than the operand distribution.
//!
//! [`compose_dataset`] assembles the full seven-category bundle,
//! [`serialize`]/[`parse`] round-trip it through a plain-text directory layout,
//! and [`audit_no_leakage`]/[`audit_labels`] re-verify every split invariant
//! and every label from scratch.

mod audit;
mod compose;
mod equation;
mod families;
mod serialize;

pub use audit::{audit_labels, audit_no_leakage, LeakageReport, Violation};
pub use compose::{
    build_noncommutative_pool, compose_dataset, CategoryCount, DatasetBundle, Manifest,
    DEFAULT_PERMS_PER_FAMILY,
};
pub use equation::{Equation, Split, TaskTag};
pub use families::{
    build_commutativity_families, build_identity_families, count_arrangements,
    distinct_permutations, FamilyClass, FamilySide, IdentityFamily, MultisetFamily,
};
pub use serialize::{parse, serialize};

use cayley_algebra::AlgebraError;

/// Errors produced while composing, serializing, or parsing datasets.
#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    /// Invalid request parameters (sizes, modulus, chain length).
    #[error("invalid dataset configuration: {0}")]
    Config(String),
    /// The requested split sizes cannot be satisfied by the combinatorial
    /// space (or the sampler exhausted its attempt budget).
    #[error("capacity exhausted while building {category}: {detail}")]
    Capacity {
        /// Which family builder ran out of room.
        category: &'static str,
        /// Human-readable diagnosis of the shortfall.
        detail: String,
    },
    /// An underlying algebra operation failed.
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    /// A dataset file could not be parsed.
    #[error("{file}:{line}: {msg}")]
    Parse {
        /// File the error occurred in.
        file: String,
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },
    /// Filesystem failure while reading or writing a dataset directory.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
