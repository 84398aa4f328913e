//! The optimization loop, per-category evaluation, and metrics plumbing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cayley_algebra::stream::substream;
use cayley_datagen::{DatasetBundle, Split, TaskTag};
use cayley_model::{
    argmax, batch_loss_graph, forward_batch, forward_graph, init_params, register_params,
    ModelConfig, Params,
};
use cayley_nn::{Graph, NodeId};

use crate::adam::Adam;
use crate::batch::{assemble, encode_rows, Batcher, EncodedRow};
use crate::config::TrainConfig;
use crate::TrainError;

/// Exact-match counts for one slice of data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Accuracy {
    /// Rows predicted exactly right.
    pub correct: usize,
    /// Rows evaluated.
    pub total: usize,
}

impl Accuracy {
    /// Fraction correct (0 for an empty slice).
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Accuracy per task category plus the pooled total.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalResult {
    /// Per-category exact-match accuracy.
    pub per_tag: BTreeMap<TaskTag, Accuracy>,
    /// Pooled accuracy over every row.
    pub overall: Accuracy,
}

/// One evaluation snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// Optimizer step the snapshot was taken at.
    pub step: usize,
    /// Mean training loss since the previous snapshot (at step 0: the loss
    /// of the first batch under the initial parameters).
    pub loss: f64,
    /// Accuracy over the training split.
    pub train: EvalResult,
    /// Accuracy over the test split.
    pub test: EvalResult,
}

/// The full evaluation history of one training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsHistory {
    /// Snapshots in step order (step 0 first).
    pub records: Vec<EvalRecord>,
}

impl MetricsHistory {
    /// `step,tag,split,accuracy` rows for every snapshot, including pooled
    /// `all` rows.
    pub fn to_metrics_csv(&self) -> String {
        let mut out = String::from("step,tag,split,accuracy\n");
        for rec in &self.records {
            for (split, result) in [("train", &rec.train), ("test", &rec.test)] {
                for (tag, acc) in &result.per_tag {
                    writeln!(out, "{},{},{},{}", rec.step, tag.name(), split, acc.value())
                        .expect("string write");
                }
                writeln!(out, "{},all,{},{}", rec.step, split, result.overall.value())
                    .expect("string write");
            }
        }
        out
    }

    /// `step,loss` rows.
    pub fn to_loss_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for rec in &self.records {
            writeln!(out, "{},{}", rec.step, rec.loss).expect("string write");
        }
        out
    }
}

/// A trained model with its history.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    /// Final parameters.
    pub params: Params,
    /// Evaluation snapshots.
    pub history: MetricsHistory,
    /// Optimizer steps actually run.
    pub steps_run: usize,
    /// Whether the early-stop rule fired before `max_steps`.
    pub early_stopped: bool,
}

/// Evaluates exact-match accuracy per category over tokenized rows.
pub fn evaluate_rows(
    params: &Params,
    rows: &[EncodedRow],
    batch_size: usize,
) -> Result<EvalResult, TrainError> {
    let mut result = EvalResult::default();
    // Bucket by length so each forward batch is rectangular.
    let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        by_len.entry(row.tokens.len()).or_default().push(i);
    }
    for indices in by_len.values() {
        for chunk in indices.chunks(batch_size.max(1)) {
            let sequences: Vec<Vec<usize>> =
                chunk.iter().map(|&i| rows[i].tokens.clone()).collect();
            let logits = forward_batch(params, &sequences)?;
            for (&i, row_logits) in chunk.iter().zip(&logits) {
                let row = &rows[i];
                let hit = argmax(row_logits) == row.label;
                let acc = result.per_tag.entry(row.tag).or_default();
                acc.total += 1;
                result.overall.total += 1;
                if hit {
                    acc.correct += 1;
                    result.overall.correct += 1;
                }
            }
        }
    }
    Ok(result)
}

/// Evaluates one split of a bundle (encodes, buckets, and batches it).
pub fn evaluate(
    params: &Params,
    bundle: &DatasetBundle,
    split: Split,
    batch_size: usize,
) -> Result<EvalResult, TrainError> {
    let rows = encode_rows(&params.vocab, bundle.split(split))?;
    evaluate_rows(params, &rows, batch_size)
}

/// Builds the loss graph for one batch: answer-token cross-entropy by
/// default, or full next-token loss when `full_sequence` is set.
fn loss_graph(
    g: &mut Graph,
    params: &Params,
    tokens: &[usize],
    seq_len: usize,
    labels: &[usize],
    full_sequence: bool,
) -> Result<(Vec<NodeId>, NodeId), TrainError> {
    if !full_sequence {
        let (pids, loss, _) = batch_loss_graph(g, params, tokens, seq_len, labels)?;
        return Ok((pids.flat(), loss));
    }
    // Ablation path: predict token m+1 from position m at every position,
    // with the label as the final target.
    let pids = register_params(g, params);
    let answer_positions = vec![seq_len - 1; labels.len()];
    let nodes = forward_graph(g, &pids, &params.config, tokens, seq_len, &answer_positions)?;
    let logits = g.matmul_nt(nodes.normed, pids.flat()[0])?;
    let mut targets = Vec::with_capacity(tokens.len());
    for (b, &label) in labels.iter().enumerate() {
        let seq = &tokens[b * seq_len..(b + 1) * seq_len];
        targets.extend_from_slice(&seq[1..]);
        targets.push(label);
    }
    let loss = g.cross_entropy(logits, &targets)?;
    Ok((pids.flat(), loss))
}

/// Computes the loss of one batch without touching the parameters.
fn batch_loss_value(
    params: &Params,
    rows: &[EncodedRow],
    indices: &[usize],
    full_sequence: bool,
) -> Result<f64, TrainError> {
    let (tokens, seq_len, labels) = assemble(rows, indices);
    let mut g = Graph::new();
    let (_, loss) = loss_graph(&mut g, params, &tokens, seq_len, &labels, full_sequence)?;
    Ok(g.value(loss).data()[0])
}

/// Trains a fresh model on a bundle.
///
/// Randomness derives from `config.seed` via named streams (`trainer.init`
/// for weights, `trainer.shuffle` for batch order), evaluation runs at step
/// 0, every `eval_interval` steps, and at the end, and the loop aborts with
/// a diagnostic if the loss or any parameter stops being finite.
pub fn train(
    config: &TrainConfig,
    model_config: &ModelConfig,
    bundle: &DatasetBundle,
) -> Result<TrainedModel, TrainError> {
    config.validate()?;
    let n = bundle.manifest.n;
    let m = bundle.manifest.m;
    model_config.validate(m)?;
    let mut params = init_params(model_config, n, m, substream(config.seed, "trainer.init"))?;
    let train_rows = encode_rows(&params.vocab, bundle.split(Split::Train))?;
    let test_rows = encode_rows(&params.vocab, bundle.split(Split::Test))?;
    let mut batcher = Batcher::new(&train_rows, config.batch_size, substream(config.seed, "trainer.shuffle"))?;
    let mut adam = Adam::new(config, &params.tensors());

    let mut history = MetricsHistory::default();
    let snapshot = |step: usize,
                        loss: f64,
                        params: &Params,
                        history: &mut MetricsHistory|
     -> Result<(EvalResult, EvalResult), TrainError> {
        let train_eval = evaluate_rows(params, &train_rows, config.batch_size)?;
        let test_eval = evaluate_rows(params, &test_rows, config.batch_size)?;
        history.records.push(EvalRecord {
            step,
            loss,
            train: train_eval.clone(),
            test: test_eval.clone(),
        });
        Ok((train_eval, test_eval))
    };

    // Init snapshot; its loss is the first batch's loss under init weights.
    let first_batch = batcher.next_batch();
    let init_loss =
        batch_loss_value(&params, &train_rows, &first_batch, config.full_sequence_loss)?;
    snapshot(0, init_loss, &params, &mut history)?;

    let mut plateau = 0usize;
    let mut early_stopped = false;
    let mut steps_run = 0usize;
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;
    let mut pending = Some(first_batch);

    for step in 1..=config.max_steps {
        let indices = pending.take().unwrap_or_else(|| batcher.next_batch());
        let (tokens, seq_len, labels) = assemble(&train_rows, &indices);
        let mut g = Graph::new();
        let (param_ids, loss) =
            loss_graph(&mut g, &params, &tokens, seq_len, &labels, config.full_sequence_loss)?;
        let loss_value = g.value(loss).data()[0];
        if !loss_value.is_finite() {
            return Err(TrainError::Diverged { step, loss: loss_value });
        }
        g.backward(loss)?;
        let grads: Vec<Option<&cayley_nn::Tensor>> =
            param_ids.iter().map(|&id| g.grad(id)).collect();
        adam.step(&mut params.tensors_mut(), &grads);
        if !params.is_finite() {
            return Err(TrainError::Diverged { step, loss: loss_value });
        }
        loss_sum += loss_value;
        loss_count += 1;
        steps_run = step;

        let due = step % config.eval_interval == 0 || step == config.max_steps;
        if due {
            let mean_loss = loss_sum / loss_count as f64;
            loss_sum = 0.0;
            loss_count = 0;
            let (train_eval, _) = snapshot(step, mean_loss, &params, &mut history)?;
            if config.early_stop_evals > 0 {
                if train_eval.overall.value() >= config.early_stop_threshold {
                    plateau += 1;
                } else {
                    plateau = 0;
                }
                if plateau >= config.early_stop_evals {
                    early_stopped = true;
                    break;
                }
            }
        }
    }

    Ok(TrainedModel { params, history, steps_run, early_stopped })
}

/// Writes a trained model's artifacts: `model.ckpt`, `metrics.csv`,
/// `loss.csv`.
pub fn write_artifacts(out_dir: &Path, trained: &TrainedModel) -> Result<(), TrainError> {
    fs::create_dir_all(out_dir)?;
    trained.params.save(&out_dir.join("model.ckpt"))?;
    fs::write(out_dir.join("metrics.csv"), trained.history.to_metrics_csv())?;
    fs::write(out_dir.join("loss.csv"), trained.history.to_loss_csv())?;
    Ok(())
}
