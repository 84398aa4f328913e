//! The K-sweep experiment: one freshly initialized model per dataset scale,
//! shared seed policy, final test accuracies tabulated per category.

use std::fmt::Write as _;

use cayley_datagen::compose_dataset;
use cayley_model::ModelConfig;

use crate::config::TrainConfig;
use crate::train::{train, TrainedModel};
use crate::TrainError;

/// Shared settings for every run of a sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Group modulus.
    pub n: usize,
    /// Operand bound.
    pub m: usize,
    /// Test scale, fixed across the sweep.
    pub k_test: usize,
    /// Permutation budget per commutativity family.
    pub perms_per_family: usize,
    /// Dataset seed, shared by every K so runs differ only in scale.
    pub data_seed: u64,
    /// Trainer hyperparameters (the seed inside is shared too: every K
    /// trains from the same initialization).
    pub train: TrainConfig,
    /// Architecture, shared across the sweep.
    pub model: ModelConfig,
}

/// One sweep point: the scale and its trained model.
pub struct SweepEntry {
    /// Training-set scale K.
    pub k: usize,
    /// The model trained at this scale.
    pub trained: TrainedModel,
}

/// Trains one model per K (ascending), fresh init each, all seeds shared.
pub fn k_sweep(k_values: &[usize], base: &SweepConfig) -> Result<Vec<SweepEntry>, TrainError> {
    if k_values.is_empty() {
        return Err(TrainError::Config("sweep needs at least one K value".to_string()));
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TrainError::Config(format!(
            "sweep K values must be strictly ascending, got {k_values:?}"
        )));
    }
    let mut entries = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let bundle = compose_dataset(
            base.n,
            base.m,
            k,
            base.k_test,
            base.perms_per_family,
            base.data_seed,
        )?;
        let trained = train(&base.train, &base.model, &bundle)?;
        entries.push(SweepEntry { k, trained });
    }
    Ok(entries)
}

/// `k,tag,split,accuracy` table of final test accuracies, one row block
/// per sweep point.
pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    let mut out = String::from("k,tag,split,accuracy\n");
    for entry in entries {
        let last = entry.trained.history.records.last().expect("history has an init record");
        for (tag, acc) in &last.test.per_tag {
            writeln!(out, "{},{},test,{}", entry.k, tag.name(), acc.value())
                .expect("string write");
        }
        writeln!(out, "{},all,test,{}", entry.k, last.test.overall.value())
            .expect("string write");
    }
    out
}
