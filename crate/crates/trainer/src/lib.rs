//! Optimization loop, per-category evaluation, and the K-sweep experiment
//! runner.
//!
//! Training is answer-token cross-entropy (full next-token loss sits behind
//! an ablation flag), runs entirely in `f64`, and derives every random
//! stream from one seed, so identical configurations reproduce identical
//! metrics and checkpoints bit for bit.

mod adam;
mod batch;
mod config;
mod sweep;
mod train;

pub use adam::Adam;
pub use batch::{assemble, encode_rows, Batcher, EncodedRow};
pub use config::TrainConfig;
pub use sweep::{k_sweep, sweep_csv, SweepConfig, SweepEntry};
pub use train::{
    evaluate, evaluate_rows, train, write_artifacts, Accuracy, EvalRecord, EvalResult,
    MetricsHistory, TrainedModel,
};

/// Errors surfaced by training and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    /// Invalid hyperparameters or usage.
    #[error("invalid training configuration: {0}")]
    Config(String),
    /// Loss or parameters stopped being finite.
    #[error("training diverged at step {step} (loss {loss}); try a lower learning rate")]
    Diverged {
        /// Step at which the non-finite value appeared.
        step: usize,
        /// Loss value observed at that step.
        loss: f64,
    },
    /// Error from the model layer (tokenization, config, checkpoints).
    #[error(transparent)]
    Model(#[from] cayley_model::ModelError),
    /// Error from the autodiff graph.
    #[error(transparent)]
    Nn(#[from] cayley_nn::NnError),
    /// Error from dataset composition (sweeps generate their own data).
    #[error(transparent)]
    Data(#[from] cayley_datagen::DatagenError),
    /// Filesystem failure while persisting artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
