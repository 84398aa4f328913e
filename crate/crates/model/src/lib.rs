//! Tokenizer and tiny decoder-only transformer (GPT-2 family shape) with
//! per-layer hidden-state capture.
//!
//! Equations over `Z_n` are tokenized one symbol per token, run through a
//! pre-LN causal decoder with learned absolute positions and a head tied to
//! the token embedding, and read out at the `=` position. [`forward`]
//! additionally captures the residual stream at that position after the
//! embedding and after every block, which is what the probe analyses consume.

mod forward;
mod params;
mod vocab;

pub use forward::{
    argmax, batch_loss_graph, forward, forward_at, forward_batch, forward_batch_traced,
    forward_graph, predict, register_params, BlockIds, ForwardNodes, LayerTrace, ParamIds,
};
pub use params::{init_params, Block, ModelConfig, Params, INIT_STD};
pub use vocab::{Vocabulary, EQUALS_SYMBOL, PAD_SYMBOL};

/// Errors surfaced by tokenization, configuration, and checkpoints.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    /// Invalid architecture or usage.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A symbol or token id outside the vocabulary.
    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),
    /// Input longer than the model's context window.
    #[error("input of {len} tokens exceeds context_len {context_len}")]
    Overlength {
        /// Offending sequence length.
        len: usize,
        /// The model's context window.
        context_len: usize,
    },
    /// Error raised by the underlying autodiff graph.
    #[error(transparent)]
    Nn(#[from] cayley_nn::NnError),
    /// Filesystem failure while reading or writing a checkpoint.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// A checkpoint file that cannot be decoded.
    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),
}
