//! Dense f64 tensors and reverse-mode automatic differentiation.
//!
//! The crate provides exactly what a small decoder-only transformer needs:
//! a rank-1/2 [`Tensor`], a tape-based [`Graph`] whose construction order is
//! its topological order, a fused causal-attention op, and a finite-difference
//! [`grad_check`] harness for validating every backward rule.
//!
//! All arithmetic is `f64` with fixed reduction orders, so identical inputs
//! produce bitwise-identical outputs on every run.

mod gradcheck;
mod graph;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport, WorstCoordinate};
pub use graph::{Graph, NodeId, LAYER_NORM_EPS};
pub use tensor::Tensor;

/// Errors surfaced by tensor construction and graph operations.
#[derive(Debug, thiserror::Error)]
pub enum NnError {
    /// A tensor or node was built with an unusable shape.
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    /// Operand shapes are incompatible for the named operation.
    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch {
        /// The operation that rejected its operands.
        op: &'static str,
        /// Human-readable description of the offending shapes.
        details: String,
    },
    /// `backward` was called on a node that is not a scalar.
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss {
        /// Shape of the node passed as the loss.
        shape: Vec<usize>,
    },
}
