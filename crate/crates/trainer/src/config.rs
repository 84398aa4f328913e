//! Training hyperparameters.

use serde::{Deserialize, Serialize};

use crate::TrainError;

/// Optimization hyperparameters. The defaults are the de-facto
/// small-transformer values; every field is overridable from config files
/// and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Adam step size.
    pub learning_rate: f64,
    /// Sequences per optimization step.
    pub batch_size: usize,
    /// Hard cap on optimization steps.
    pub max_steps: usize,
    /// Steps between evaluations (an eval always runs at step 0 and at the
    /// final step).
    pub eval_interval: usize,
    /// Adam first-moment decay.
    pub beta1: f64,
    /// Adam second-moment decay.
    pub beta2: f64,
    /// Adam denominator fuzz.
    pub epsilon: f64,
    /// Decoupled weight decay (0 disables).
    pub weight_decay: f64,
    /// Root seed; init and shuffle streams are derived from it by name.
    pub seed: u64,
    /// Early stop: stop once train accuracy ≥ `early_stop_threshold` for
    /// this many consecutive evaluations (0 disables early stopping).
    pub early_stop_evals: usize,
    /// Early-stop accuracy threshold.
    pub early_stop_threshold: f64,
    /// Train with full next-token loss over every position instead of the
    /// default answer-token-only loss (ablation flag).
    pub full_sequence_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            batch_size: 64,
            max_steps: 4000,
            eval_interval: 250,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            seed: 0,
            early_stop_evals: 5,
            early_stop_threshold: 0.999,
            full_sequence_loss: false,
        }
    }
}

impl TrainConfig {
    /// Rejects configurations that cannot run.
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(TrainError::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".to_string()));
        }
        if self.eval_interval == 0 {
            return Err(TrainError::Config("eval interval must be at least 1".to_string()));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(TrainError::Config(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(TrainError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(TrainError::Config(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if !(0.0..=1.0).contains(&self.early_stop_threshold) {
            return Err(TrainError::Config(format!(
                "early-stop threshold must lie in [0, 1], got {}",
                self.early_stop_threshold
            )));
        }
        Ok(())
    }
}
