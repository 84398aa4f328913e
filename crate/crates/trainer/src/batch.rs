//! Dataset encoding and bucket-by-length batching.
//!
//! Prompts come in a few distinct lengths (identity bases are one operand
//! shorter than full rows), so batches are drawn from per-length buckets and
//! never need padding.

use std::collections::BTreeMap;

use cayley_datagen::{Equation, TaskTag};
use cayley_model::Vocabulary;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::TrainError;

/// One tokenized dataset row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRow {
    /// Prompt ids, ending with `=`.
    pub tokens: Vec<usize>,
    /// Label token id.
    pub label: usize,
    /// Task category the row belongs to.
    pub tag: TaskTag,
}

/// Tokenizes dataset rows against a vocabulary.
pub fn encode_rows(
    vocab: &Vocabulary,
    rows: &[(Equation, TaskTag)],
) -> Result<Vec<EncodedRow>, TrainError> {
    rows.iter()
        .map(|(eq, tag)| {
            let (tokens, label) = vocab.encode_line(&eq.render())?;
            Ok(EncodedRow { tokens, label, tag: *tag })
        })
        .collect()
}

/// Deterministic epoch-shuffled batch planner over equal-length buckets.
pub struct Batcher {
    buckets: Vec<Vec<usize>>,
    batch_size: usize,
    rng: ChaCha12Rng,
    epoch: Vec<Vec<usize>>,
    cursor: usize,
}

impl Batcher {
    /// Groups row indices by prompt length.
    pub fn new(rows: &[EncodedRow], batch_size: usize, seed: u64) -> Result<Self, TrainError> {
        if rows.is_empty() {
            return Err(TrainError::Config("training split is empty".to_string()));
        }
        if batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".to_string()));
        }
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            by_len.entry(row.tokens.len()).or_default().push(i);
        }
        let mut batcher = Self {
            buckets: by_len.into_values().collect(),
            batch_size,
            rng: ChaCha12Rng::seed_from_u64(seed),
            epoch: Vec::new(),
            cursor: 0,
        };
        batcher.reshuffle();
        Ok(batcher)
    }

    fn reshuffle(&mut self) {
        self.epoch.clear();
        for bucket in &mut self.buckets {
            bucket.shuffle(&mut self.rng);
            for chunk in bucket.chunks(self.batch_size) {
                self.epoch.push(chunk.to_vec());
            }
        }
        self.epoch.shuffle(&mut self.rng);
        self.cursor = 0;
    }

    /// Number of batches one pass over the data yields.
    pub fn batches_per_epoch(&self) -> usize {
        self.epoch.len()
    }

    /// Row indices of the next batch; reshuffles when an epoch ends.
    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.cursor >= self.epoch.len() {
            self.reshuffle();
        }
        let batch = self.epoch[self.cursor].clone();
        self.cursor += 1;
        batch
    }
}

/// Flattens a batch of row indices into (tokens, seq_len, labels).
/// All referenced rows must share one prompt length.
pub fn assemble(rows: &[EncodedRow], indices: &[usize]) -> (Vec<usize>, usize, Vec<usize>) {
    let seq_len = rows[indices[0]].tokens.len();
    let mut tokens = Vec::with_capacity(indices.len() * seq_len);
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        debug_assert_eq!(rows[i].tokens.len(), seq_len, "bucket mixed lengths");
        tokens.extend_from_slice(&rows[i].tokens);
        labels.push(rows[i].label);
    }
    (tokens, seq_len, labels)
}
