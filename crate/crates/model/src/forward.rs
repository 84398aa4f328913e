//! Graph construction for the decoder stack, plus the high-level
//! forward/predict API with per-layer hidden-state capture.

use cayley_nn::{Graph, NnError, NodeId};

use crate::params::{ModelConfig, Params};
use crate::ModelError;

/// Node ids of one block's parameters inside a [`Graph`].
pub struct BlockIds {
    ln1_gain: NodeId,
    ln1_bias: NodeId,
    w_q: NodeId,
    b_q: NodeId,
    w_k: NodeId,
    b_k: NodeId,
    w_v: NodeId,
    b_v: NodeId,
    w_o: NodeId,
    b_o: NodeId,
    ln2_gain: NodeId,
    ln2_bias: NodeId,
    w_fc1: NodeId,
    b_fc1: NodeId,
    w_fc2: NodeId,
    b_fc2: NodeId,
}

/// Node ids of every parameter tensor, in the canonical order of
/// [`Params::tensors`].
pub struct ParamIds {
    w_e: NodeId,
    w_p: NodeId,
    blocks: Vec<BlockIds>,
    ln_f_gain: NodeId,
    ln_f_bias: NodeId,
}

impl ParamIds {
    /// Flat id list aligned with [`Params::tensors`] /
    /// [`Params::tensors_mut`] — the optimizer iterates these together.
    pub fn flat(&self) -> Vec<NodeId> {
        let mut out = vec![self.w_e, self.w_p];
        for b in &self.blocks {
            out.extend([
                b.ln1_gain, b.ln1_bias, b.w_q, b.b_q, b.w_k, b.b_k, b.w_v, b.b_v, b.w_o,
                b.b_o, b.ln2_gain, b.ln2_bias, b.w_fc1, b.b_fc1, b.w_fc2, b.b_fc2,
            ]);
        }
        out.extend([self.ln_f_gain, self.ln_f_bias]);
        out
    }

    /// Rebuilds the structured view from ids in [`ParamIds::flat`] order —
    /// the inverse of `flat`, used when another component (for example the
    /// gradient checker) owns leaf creation.
    pub fn from_flat(ids: &[NodeId], layers: usize) -> Result<Self, NnError> {
        let expected = 2 + 16 * layers + 2;
        if ids.len() != expected {
            return Err(NnError::InvalidShape(format!(
                "{} node ids cannot form {layers}-layer parameters (need {expected})",
                ids.len()
            )));
        }
        let blocks = (0..layers)
            .map(|l| {
                let p = 2 + 16 * l;
                BlockIds {
                    ln1_gain: ids[p],
                    ln1_bias: ids[p + 1],
                    w_q: ids[p + 2],
                    b_q: ids[p + 3],
                    w_k: ids[p + 4],
                    b_k: ids[p + 5],
                    w_v: ids[p + 6],
                    b_v: ids[p + 7],
                    w_o: ids[p + 8],
                    b_o: ids[p + 9],
                    ln2_gain: ids[p + 10],
                    ln2_bias: ids[p + 11],
                    w_fc1: ids[p + 12],
                    b_fc1: ids[p + 13],
                    w_fc2: ids[p + 14],
                    b_fc2: ids[p + 15],
                }
            })
            .collect();
        Ok(ParamIds {
            w_e: ids[0],
            w_p: ids[1],
            blocks,
            ln_f_gain: ids[expected - 2],
            ln_f_bias: ids[expected - 1],
        })
    }
}

/// Pushes every parameter tensor onto the tape as a leaf.
pub fn register_params(g: &mut Graph, p: &Params) -> ParamIds {
    let w_e = g.leaf(p.w_e.clone());
    let w_p = g.leaf(p.w_p.clone());
    let blocks = p
        .blocks
        .iter()
        .map(|b| BlockIds {
            ln1_gain: g.leaf(b.ln1_gain.clone()),
            ln1_bias: g.leaf(b.ln1_bias.clone()),
            w_q: g.leaf(b.w_q.clone()),
            b_q: g.leaf(b.b_q.clone()),
            w_k: g.leaf(b.w_k.clone()),
            b_k: g.leaf(b.b_k.clone()),
            w_v: g.leaf(b.w_v.clone()),
            b_v: g.leaf(b.b_v.clone()),
            w_o: g.leaf(b.w_o.clone()),
            b_o: g.leaf(b.b_o.clone()),
            ln2_gain: g.leaf(b.ln2_gain.clone()),
            ln2_bias: g.leaf(b.ln2_bias.clone()),
            w_fc1: g.leaf(b.w_fc1.clone()),
            b_fc1: g.leaf(b.b_fc1.clone()),
            w_fc2: g.leaf(b.w_fc2.clone()),
            b_fc2: g.leaf(b.b_fc2.clone()),
        })
        .collect();
    ParamIds {
        w_e,
        w_p,
        blocks,
        ln_f_gain: g.leaf(p.ln_f_gain.clone()),
        ln_f_bias: g.leaf(p.ln_f_bias.clone()),
    }
}

/// Output nodes of one forward construction.
pub struct ForwardNodes {
    /// Residual stream after the embedding and after each block
    /// (`layers + 1` entries, each `[batch · seq_len, d_model]`).
    pub residuals: Vec<NodeId>,
    /// Final layer-norm output, `[batch · seq_len, d_model]`.
    pub normed: NodeId,
    /// Logits at each sequence's answer position, `[batch, vocab]`,
    /// produced by the head tied to the token embedding.
    pub answer_logits: NodeId,
}

/// Builds the decoder stack over a batch of equal-length sequences.
///
/// `tokens` holds `batch · seq_len` ids; `answer_positions` gives the
/// position (within its sequence) whose logits each sequence reads out.
pub fn forward_graph(
    g: &mut Graph,
    ids: &ParamIds,
    config: &ModelConfig,
    tokens: &[usize],
    seq_len: usize,
    answer_positions: &[usize],
) -> Result<ForwardNodes, NnError> {
    if seq_len == 0 || tokens.is_empty() || !tokens.len().is_multiple_of(seq_len) {
        return Err(NnError::InvalidShape(format!(
            "{} tokens do not form whole sequences of length {seq_len}",
            tokens.len()
        )));
    }
    let batch = tokens.len() / seq_len;
    if answer_positions.len() != batch {
        return Err(NnError::InvalidShape(format!(
            "{} answer positions for {batch} sequences",
            answer_positions.len()
        )));
    }

    let positions: Vec<usize> = (0..batch).flat_map(|_| 0..seq_len).collect();
    let tok = g.gather_rows(ids.w_e, tokens)?;
    let pos = g.gather_rows(ids.w_p, &positions)?;
    let mut h = g.add(tok, pos)?;
    let mut residuals = vec![h];

    for b in &ids.blocks {
        let normed = g.layer_norm(h, b.ln1_gain, b.ln1_bias)?;
        let q = g.matmul(normed, b.w_q)?;
        let q = g.add_bias(q, b.b_q)?;
        let k = g.matmul(normed, b.w_k)?;
        let k = g.add_bias(k, b.b_k)?;
        let v = g.matmul(normed, b.w_v)?;
        let v = g.add_bias(v, b.b_v)?;
        let attn = g.causal_attention(q, k, v, config.heads, seq_len)?;
        let proj = g.matmul(attn, b.w_o)?;
        let proj = g.add_bias(proj, b.b_o)?;
        h = g.add(h, proj)?;

        let normed = g.layer_norm(h, b.ln2_gain, b.ln2_bias)?;
        let up = g.matmul(normed, b.w_fc1)?;
        let up = g.add_bias(up, b.b_fc1)?;
        let act = g.gelu(up)?;
        let down = g.matmul(act, b.w_fc2)?;
        let down = g.add_bias(down, b.b_fc2)?;
        h = g.add(h, down)?;
        residuals.push(h);
    }

    let normed = g.layer_norm(h, ids.ln_f_gain, ids.ln_f_bias)?;
    let answer_rows: Vec<usize> = answer_positions
        .iter()
        .enumerate()
        .map(|(b, &p)| b * seq_len + p)
        .collect();
    let answers = g.gather_rows(normed, &answer_rows)?;
    let answer_logits = g.matmul_nt(answers, ids.w_e)?;

    Ok(ForwardNodes { residuals, normed, answer_logits })
}

/// Builds forward + cross-entropy loss for a training batch; returns the
/// registered parameter ids (for gradient readout), the loss node, and the
/// answer-logit node.
pub fn batch_loss_graph(
    g: &mut Graph,
    params: &Params,
    tokens: &[usize],
    seq_len: usize,
    labels: &[usize],
) -> Result<(ParamIds, NodeId, NodeId), NnError> {
    let ids = register_params(g, params);
    let answer_positions = vec![seq_len - 1; labels.len()];
    let nodes = forward_graph(g, &ids, &params.config, tokens, seq_len, &answer_positions)?;
    let loss = g.cross_entropy(nodes.answer_logits, labels)?;
    Ok((ids, loss, nodes.answer_logits))
}

/// Residual-stream snapshots at one sequence's answer position:
/// entry 0 is the token+position embedding, entry `k` the stream after
/// block `k` — `layers + 1` vectors of width `d_model`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// The snapshots, outermost index = layer.
    pub snapshots: Vec<Vec<f64>>,
}

fn validate_sequence(params: &Params, ids: &[usize]) -> Result<usize, ModelError> {
    if ids.is_empty() {
        return Err(ModelError::Config("empty prompt".to_string()));
    }
    if ids.len() > params.config.context_len {
        return Err(ModelError::Overlength {
            len: ids.len(),
            context_len: params.config.context_len,
        });
    }
    if let Some(&bad) = ids.iter().find(|&&t| t >= params.vocab.len()) {
        return Err(ModelError::UnknownSymbol(format!("token id {bad}")));
    }
    // The answer is read at the last non-PAD position, so trailing padding
    // cannot move or influence the readout.
    let pad = params.vocab.pad_id();
    ids.iter()
        .rposition(|&t| t != pad)
        .ok_or_else(|| ModelError::Config("prompt is all padding".to_string()))
}

/// Runs one sequence; returns the logits at the answer position (last
/// non-PAD token) and the per-layer hidden-state trace at that position.
pub fn forward(params: &Params, ids: &[usize]) -> Result<(Vec<f64>, LayerTrace), ModelError> {
    let answer_pos = validate_sequence(params, ids)?;
    forward_at(params, ids, answer_pos)
}

/// Like [`forward`] but reads out at an explicit position, regardless of
/// what follows it — the direct way to observe the causal-mask guarantee.
pub fn forward_at(
    params: &Params,
    ids: &[usize],
    answer_pos: usize,
) -> Result<(Vec<f64>, LayerTrace), ModelError> {
    validate_sequence(params, ids)?;
    if answer_pos >= ids.len() {
        return Err(ModelError::Config(format!(
            "answer position {answer_pos} outside sequence of length {}",
            ids.len()
        )));
    }
    let mut g = Graph::new();
    let pids = register_params(&mut g, params);
    let nodes = forward_graph(&mut g, &pids, &params.config, ids, ids.len(), &[answer_pos])?;
    let logits = g.value(nodes.answer_logits).data().to_vec();
    let d = params.config.d_model;
    let snapshots = nodes
        .residuals
        .iter()
        .map(|&r| g.value(r).data()[answer_pos * d..(answer_pos + 1) * d].to_vec())
        .collect();
    Ok((logits, LayerTrace { snapshots }))
}

/// Runs a batch of equal-length sequences; returns each sequence's
/// answer-position logits (answer read at the last position).
pub fn forward_batch(
    params: &Params,
    sequences: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>, ModelError> {
    Ok(forward_batch_traced(params, sequences, false)?.0)
}

/// Batched forward that can also capture per-layer traces (at the last
/// position of each sequence). All sequences must share one length.
pub fn forward_batch_traced(
    params: &Params,
    sequences: &[Vec<usize>],
    capture: bool,
) -> Result<(Vec<Vec<f64>>, Vec<LayerTrace>), ModelError> {
    let Some(first) = sequences.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    let seq_len = first.len();
    if let Some(bad) = sequences.iter().find(|s| s.len() != seq_len) {
        return Err(ModelError::Config(format!(
            "batch mixes sequence lengths {seq_len} and {}",
            bad.len()
        )));
    }
    let mut tokens = Vec::with_capacity(sequences.len() * seq_len);
    let mut answer_positions = Vec::with_capacity(sequences.len());
    for s in sequences {
        answer_positions.push(validate_sequence(params, s)?);
        tokens.extend_from_slice(s);
    }
    let mut g = Graph::new();
    let pids = register_params(&mut g, params);
    let nodes =
        forward_graph(&mut g, &pids, &params.config, &tokens, seq_len, &answer_positions)?;
    let vocab = params.vocab.len();
    let logits_all = g.value(nodes.answer_logits);
    let logits: Vec<Vec<f64>> = (0..sequences.len())
        .map(|b| logits_all.data()[b * vocab..(b + 1) * vocab].to_vec())
        .collect();
    let mut traces = Vec::new();
    if capture {
        let d = params.config.d_model;
        for (b, &pos) in answer_positions.iter().enumerate() {
            let row = b * seq_len + pos;
            let snapshots = nodes
                .residuals
                .iter()
                .map(|&r| g.value(r).data()[row * d..(row + 1) * d].to_vec())
                .collect();
            traces.push(LayerTrace { snapshots });
        }
    }
    Ok((logits, traces))
}

/// Index of the largest logit (first one on ties).
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Encodes a prompt, runs the model, and decodes the argmax label token.
pub fn predict(params: &Params, prompt: &str) -> Result<String, ModelError> {
    let ids = params.vocab.encode(prompt)?;
    let (logits, _) = forward(params, &ids)?;
    let token = argmax(&logits);
    Ok(params.vocab.decode(token)?.to_string())
}
