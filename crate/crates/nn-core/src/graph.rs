//! The computation tape: forward ops record themselves in construction order,
//! so reversing the node list is exactly a reverse-topological traversal.

use crate::tensor::{add_assign, gemm, matmul_raw, Tensor};
use crate::NnError;

/// Epsilon inside the layer-norm variance square root. Chosen so normalized
/// rows keep their variance within 1e-6 of 1 for unit-scale activations.
pub const LAYER_NORM_EPS: f64 = 1e-8;

/// GELU tanh-approximation constant √(2/π).
const GELU_C: f64 = 0.797_884_560_802_865_4;
/// GELU tanh-approximation cubic coefficient.
const GELU_A: f64 = 0.044_715;

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

impl NodeId {
    /// Position of the node on its tape.
    pub fn index(self) -> usize {
        self.0
    }
}

/// Recorded operation with saved context for the backward pass.
enum Op {
    Leaf,
    Matmul { a: NodeId, b: NodeId },
    MatmulNT { a: NodeId, b: NodeId },
    Add { a: NodeId, b: NodeId },
    AddBias { a: NodeId, bias: NodeId },
    Scale { a: NodeId, c: f64 },
    ConcatCols { parts: Vec<NodeId> },
    SliceRows { a: NodeId, start: usize },
    SliceCols { a: NodeId, start: usize },
    GatherRows { a: NodeId, indices: Vec<usize> },
    Softmax { a: NodeId },
    LayerNorm { a: NodeId, gain: NodeId, bias: NodeId, xhat: Tensor, inv_std: Vec<f64> },
    Gelu { a: NodeId },
    CrossEntropy { logits: NodeId, probs: Tensor, targets: Vec<usize> },
    CausalAttention {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        heads: usize,
        seq_len: usize,
        /// Post-softmax attention weights, `(batch · heads · seq_len)` rows
        /// of length `seq_len`, blocked by (batch, head).
        attn: Vec<f64>,
    },
    SumAll { a: NodeId },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// A dynamically built forward graph with reverse-mode differentiation.
///
/// Nodes are appended in construction order; [`Graph::backward`] walks them in
/// reverse, visiting each exactly once. Parameters and inputs enter through
/// [`Graph::leaf`]; their gradients are read back with [`Graph::grad`] after
/// a backward pass.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

impl Graph {
    /// An empty tape.
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when no node has been recorded.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.grads.push(None);
        NodeId(self.nodes.len() - 1)
    }

    fn check(&self, id: NodeId) -> Result<(), NnError> {
        if id.0 >= self.nodes.len() {
            return Err(NnError::InvalidShape(format!(
                "node id {} out of range (tape has {} nodes)",
                id.0,
                self.nodes.len()
            )));
        }
        Ok(())
    }

    /// The forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// The gradient accumulated for a node by the last [`Graph::backward`]
    /// call; `None` for nodes the loss does not depend on.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    /// Records an input or parameter tensor.
    pub fn leaf(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf)
    }

    /// `a · b` for `a: [m, k]`, `b: [k, n]`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.check(a)?;
        self.check(b)?;
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if va.cols() != vb.rows() {
            return Err(NnError::ShapeMismatch {
                op: "matmul",
                details: format!("{:?} · {:?}", va.shape(), vb.shape()),
            });
        }
        let out = matmul_raw(va, vb, false, false);
        Ok(self.push(out, Op::Matmul { a, b }))
    }

    /// `a · bᵀ` for `a: [m, k]`, `b: [n, k]` — the tied-embedding head.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.check(a)?;
        self.check(b)?;
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if va.cols() != vb.cols() {
            return Err(NnError::ShapeMismatch {
                op: "matmul_nt",
                details: format!("{:?} · transpose({:?})", va.shape(), vb.shape()),
            });
        }
        let out = matmul_raw(va, vb, false, true);
        Ok(self.push(out, Op::MatmulNT { a, b }))
    }

    /// Element-wise sum of two same-shape tensors.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.check(a)?;
        self.check(b)?;
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if !va.same_shape(vb) {
            return Err(NnError::ShapeMismatch {
                op: "add",
                details: format!("{:?} + {:?}", va.shape(), vb.shape()),
            });
        }
        let mut out = va.clone();
        add_assign(&mut out, vb);
        Ok(self.push(out, Op::Add { a, b }))
    }

    /// Adds a 1-D bias to every row of `a`.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId, NnError> {
        self.check(a)?;
        self.check(bias)?;
        let (va, vbias) = (&self.nodes[a.0].value, &self.nodes[bias.0].value);
        if vbias.rows() != 1 || vbias.cols() != va.cols() {
            return Err(NnError::ShapeMismatch {
                op: "add_bias",
                details: format!("{:?} + bias {:?}", va.shape(), vbias.shape()),
            });
        }
        let cols = va.cols();
        let mut out = va.clone();
        for (i, x) in out.data_mut().iter_mut().enumerate() {
            *x += vbias.data()[i % cols];
        }
        Ok(self.push(out, Op::AddBias { a, bias }))
    }

    /// Multiplies every element by the constant `c`.
    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId, NnError> {
        self.check(a)?;
        let mut out = self.nodes[a.0].value.clone();
        for x in out.data_mut() {
            *x *= c;
        }
        Ok(self.push(out, Op::Scale { a, c }))
    }

    /// Concatenates matrices with equal row counts along the column axis.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, NnError> {
        if parts.is_empty() {
            return Err(NnError::ShapeMismatch { op: "concat_cols", details: "no inputs".into() });
        }
        for &p in parts {
            self.check(p)?;
        }
        let rows = self.nodes[parts[0].0].value.rows();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let v = &self.nodes[p.0].value;
            if v.rows() != rows {
                return Err(NnError::ShapeMismatch {
                    op: "concat_cols",
                    details: format!("row counts differ: {} vs {}", rows, v.rows()),
                });
            }
            widths.push(v.cols());
        }
        let total: usize = widths.iter().sum();
        let mut out = Tensor::zeros(&[rows, total]);
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(widths.iter()) {
            let v = &self.nodes[p.0].value;
            for r in 0..rows {
                out.data_mut()[r * total + offset..r * total + offset + w]
                    .copy_from_slice(&v.data()[r * w..(r + 1) * w]);
            }
            offset += w;
        }
        Ok(self.push(out, Op::ConcatCols { parts: parts.to_vec() }))
    }

    /// Rows `start .. start + len` of `a`.
    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, NnError> {
        self.check(a)?;
        let v = &self.nodes[a.0].value;
        if start + len > v.rows() {
            return Err(NnError::ShapeMismatch {
                op: "slice_rows",
                details: format!("rows {start}..{} of {:?}", start + len, v.shape()),
            });
        }
        let cols = v.cols();
        let data = v.data()[start * cols..(start + len) * cols].to_vec();
        let out = Tensor::matrix(len, cols, data).expect("shape computed above");
        Ok(self.push(out, Op::SliceRows { a, start }))
    }

    /// Columns `start .. start + len` of `a`.
    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, NnError> {
        self.check(a)?;
        let v = &self.nodes[a.0].value;
        if start + len > v.cols() {
            return Err(NnError::ShapeMismatch {
                op: "slice_cols",
                details: format!("cols {start}..{} of {:?}", start + len, v.shape()),
            });
        }
        let (rows, cols) = (v.rows(), v.cols());
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&v.data()[r * cols + start..r * cols + start + len]);
        }
        let out = Tensor::matrix(rows, len, data).expect("shape computed above");
        Ok(self.push(out, Op::SliceCols { a, start }))
    }

    /// Selects rows of `a` by index, in order (duplicates allowed); the
    /// embedding-lookup primitive. Gradients scatter-add back.
    pub fn gather_rows(&mut self, a: NodeId, indices: &[usize]) -> Result<NodeId, NnError> {
        self.check(a)?;
        let v = &self.nodes[a.0].value;
        if let Some(&bad) = indices.iter().find(|&&i| i >= v.rows()) {
            return Err(NnError::ShapeMismatch {
                op: "gather_rows",
                details: format!("row {bad} out of range for {:?}", v.shape()),
            });
        }
        let cols = v.cols();
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            data.extend_from_slice(&v.data()[i * cols..(i + 1) * cols]);
        }
        let out = Tensor::matrix(indices.len(), cols, data).expect("shape computed above");
        Ok(self.push(out, Op::GatherRows { a, indices: indices.to_vec() }))
    }

    /// Row-wise softmax (max-shifted for stability; rows sum to 1).
    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.check(a)?;
        let v = &self.nodes[a.0].value;
        let (rows, cols) = (v.rows(), v.cols());
        let mut out = v.clone();
        for r in 0..rows {
            softmax_row(&mut out.data_mut()[r * cols..(r + 1) * cols]);
        }
        Ok(self.push(out, Op::Softmax { a }))
    }

    /// Row-wise layer normalization with per-column gain and bias.
    pub fn layer_norm(
        &mut self,
        a: NodeId,
        gain: NodeId,
        bias: NodeId,
    ) -> Result<NodeId, NnError> {
        self.check(a)?;
        self.check(gain)?;
        self.check(bias)?;
        let v = &self.nodes[a.0].value;
        let (rows, cols) = (v.rows(), v.cols());
        for (name, id) in [("gain", gain), ("bias", bias)] {
            let p = &self.nodes[id.0].value;
            if p.rows() != 1 || p.cols() != cols {
                return Err(NnError::ShapeMismatch {
                    op: "layer_norm",
                    details: format!("{name} {:?} for input {:?}", p.shape(), v.shape()),
                });
            }
        }
        let mut xhat = Tensor::zeros(&[rows, cols]);
        let mut inv_std = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &v.data()[r * cols..(r + 1) * cols];
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / cols as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std.push(inv);
            for (dst, &x) in xhat.data_mut()[r * cols..(r + 1) * cols].iter_mut().zip(row) {
                *dst = (x - mean) * inv;
            }
        }
        let g = self.nodes[gain.0].value.data();
        let b = self.nodes[bias.0].value.data();
        let mut out = Tensor::zeros(&[rows, cols]);
        for r in 0..rows {
            for c in 0..cols {
                out.data_mut()[r * cols + c] = xhat.at(r, c) * g[c] + b[c];
            }
        }
        Ok(self.push(out, Op::LayerNorm { a, gain, bias, xhat, inv_std }))
    }

    /// GELU activation (tanh approximation, as in GPT-2).
    pub fn gelu(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.check(a)?;
        let mut out = self.nodes[a.0].value.clone();
        for x in out.data_mut() {
            let u = GELU_C * (*x + GELU_A * *x * *x * *x);
            *x = 0.5 * *x * (1.0 + u.tanh());
        }
        Ok(self.push(out, Op::Gelu { a }))
    }

    /// Mean cross-entropy between logit rows and integer targets.
    pub fn cross_entropy(&mut self, logits: NodeId, targets: &[usize]) -> Result<NodeId, NnError> {
        self.check(logits)?;
        let v = &self.nodes[logits.0].value;
        let (rows, cols) = (v.rows(), v.cols());
        if targets.len() != rows {
            return Err(NnError::ShapeMismatch {
                op: "cross_entropy",
                details: format!("{} targets for {rows} logit rows", targets.len()),
            });
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= cols) {
            return Err(NnError::ShapeMismatch {
                op: "cross_entropy",
                details: format!("target {bad} out of range for {cols} classes"),
            });
        }
        let mut probs = v.clone();
        let mut loss = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = &mut probs.data_mut()[r * cols..(r + 1) * cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_z = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            loss += log_z - row[t];
            softmax_row(row);
        }
        loss /= rows as f64;
        let out = Tensor::scalar(loss);
        Ok(self.push(out, Op::CrossEntropy { logits, probs, targets: targets.to_vec() }))
    }

    /// Multi-head scaled-dot-product attention with a causal mask.
    ///
    /// `q`, `k`, `v` are `[batch · seq_len, d_model]` with rows blocked by
    /// sequence; `d_model` splits into `heads` equal slices. Scores are
    /// scaled by `1/√d_k`; position `i` attends to positions `0..=i`.
    pub fn causal_attention(
        &mut self,
        q: NodeId,
        k: NodeId,
        v: NodeId,
        heads: usize,
        seq_len: usize,
    ) -> Result<NodeId, NnError> {
        self.check(q)?;
        self.check(k)?;
        self.check(v)?;
        let (vq, vk, vv) = (
            &self.nodes[q.0].value,
            &self.nodes[k.0].value,
            &self.nodes[v.0].value,
        );
        if !vq.same_shape(vk) || !vq.same_shape(vv) {
            return Err(NnError::ShapeMismatch {
                op: "causal_attention",
                details: format!("q {:?}, k {:?}, v {:?}", vq.shape(), vk.shape(), vv.shape()),
            });
        }
        let d_model = vq.cols();
        let total_rows = vq.rows();
        if heads == 0 || d_model % heads != 0 {
            return Err(NnError::ShapeMismatch {
                op: "causal_attention",
                details: format!("d_model {d_model} not divisible by {heads} heads"),
            });
        }
        if seq_len == 0 || total_rows % seq_len != 0 {
            return Err(NnError::ShapeMismatch {
                op: "causal_attention",
                details: format!("{total_rows} rows not divisible by seq_len {seq_len}"),
            });
        }
        let batch = total_rows / seq_len;
        let d_k = d_model / heads;
        let scale = 1.0 / (d_k as f64).sqrt();
        let mut attn = vec![0.0f64; batch * heads * seq_len * seq_len];
        let mut out = Tensor::zeros(&[total_rows, d_model]);
        for b in 0..batch {
            for h in 0..heads {
                let row0 = b * seq_len;
                let col0 = h * d_k;
                let block = &mut attn
                    [(b * heads + h) * seq_len * seq_len..(b * heads + h + 1) * seq_len * seq_len];
                // scores = scale · Q_bh · K_bhᵀ  (strided views into q/k)
                gemm(
                    seq_len,
                    d_k,
                    seq_len,
                    scale,
                    &vq.data()[row0 * d_model + col0..],
                    d_model as isize,
                    1,
                    &vk.data()[row0 * d_model + col0..],
                    1,
                    d_model as isize,
                    0.0,
                    block,
                    seq_len as isize,
                );
                // Causal mask, then softmax each row.
                for i in 0..seq_len {
                    let row = &mut block[i * seq_len..(i + 1) * seq_len];
                    for x in row[i + 1..].iter_mut() {
                        *x = f64::NEG_INFINITY;
                    }
                    softmax_row(row);
                }
                // out_bh = attn · V_bh
                gemm(
                    seq_len,
                    seq_len,
                    d_k,
                    1.0,
                    block,
                    seq_len as isize,
                    1,
                    &vv.data()[row0 * d_model + col0..],
                    d_model as isize,
                    1,
                    0.0,
                    &mut out.data_mut()[row0 * d_model + col0..],
                    d_model as isize,
                );
            }
        }
        Ok(self.push(out, Op::CausalAttention { q, k, v, heads, seq_len, attn }))
    }

    /// Sum of every element — the scalarizer used by op-level grad checks.
    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.check(a)?;
        let s = self.nodes[a.0].value.data().iter().sum();
        Ok(self.push(Tensor::scalar(s), Op::SumAll { a }))
    }

    /// Reverse-mode sweep from a scalar `loss` node: populates gradients for
    /// every node the loss depends on (read them with [`Graph::grad`]).
    pub fn backward(&mut self, loss: NodeId) -> Result<(), NnError> {
        self.check(loss)?;
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(NnError::NonScalarLoss {
                shape: self.nodes[loss.0].value.shape().to_vec(),
            });
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(dout) = self.grads[idx].clone() else {
                continue;
            };
            // Split borrows: nodes are read-only here, grads are written.
            let (nodes, grads) = (&self.nodes, &mut self.grads);
            let accum = |grads: &mut Vec<Option<Tensor>>, id: NodeId, delta: Tensor| {
                match &mut grads[id.0] {
                    Some(g) => add_assign(g, &delta),
                    slot @ None => *slot = Some(delta),
                }
            };
            match &nodes[idx].op {
                Op::Leaf => {}
                Op::Matmul { a, b } => {
                    let da = matmul_raw(&dout, &nodes[b.0].value, false, true);
                    let db = matmul_raw(&nodes[a.0].value, &dout, true, false);
                    accum(grads, *a, da);
                    accum(grads, *b, db);
                }
                Op::MatmulNT { a, b } => {
                    let da = matmul_raw(&dout, &nodes[b.0].value, false, false);
                    let db = matmul_raw(&dout, &nodes[a.0].value, true, false);
                    accum(grads, *a, da);
                    accum(grads, *b, db);
                }
                Op::Add { a, b } => {
                    accum(grads, *a, dout.clone());
                    accum(grads, *b, dout);
                }
                Op::AddBias { a, bias } => {
                    let cols = dout.cols();
                    let mut dbias = Tensor::zeros(&[cols]);
                    for (i, &g) in dout.data().iter().enumerate() {
                        dbias.data_mut()[i % cols] += g;
                    }
                    accum(grads, *a, dout);
                    accum(grads, *bias, dbias);
                }
                Op::Scale { a, c } => {
                    let mut da = dout;
                    let c = *c;
                    for x in da.data_mut() {
                        *x *= c;
                    }
                    accum(grads, *a, da);
                }
                Op::ConcatCols { parts } => {
                    let parts = parts.clone();
                    let rows = dout.rows();
                    let total = dout.cols();
                    let mut offset = 0;
                    for p in parts {
                        let w = nodes[p.0].value.cols();
                        let mut dp = Tensor::zeros(&[rows, w]);
                        for r in 0..rows {
                            dp.data_mut()[r * w..(r + 1) * w].copy_from_slice(
                                &dout.data()[r * total + offset..r * total + offset + w],
                            );
                        }
                        accum(grads, p, dp);
                        offset += w;
                    }
                }
                Op::SliceRows { a, start } => {
                    let v = &nodes[a.0].value;
                    let cols = v.cols();
                    let mut da = Tensor::zeros(&[v.rows(), cols]);
                    da.data_mut()[start * cols..start * cols + dout.numel()]
                        .copy_from_slice(dout.data());
                    accum(grads, *a, da);
                }
                Op::SliceCols { a, start } => {
                    let v = &nodes[a.0].value;
                    let (rows, cols, w) = (v.rows(), v.cols(), dout.cols());
                    let mut da = Tensor::zeros(&[rows, cols]);
                    for r in 0..rows {
                        da.data_mut()[r * cols + start..r * cols + start + w]
                            .copy_from_slice(&dout.data()[r * w..(r + 1) * w]);
                    }
                    accum(grads, *a, da);
                }
                Op::GatherRows { a, indices } => {
                    let v = &nodes[a.0].value;
                    let cols = v.cols();
                    let mut da = Tensor::zeros(&[v.rows(), cols]);
                    for (r, &i) in indices.iter().enumerate() {
                        for c in 0..cols {
                            da.data_mut()[i * cols + c] += dout.at(r, c);
                        }
                    }
                    accum(grads, *a, da);
                }
                Op::Softmax { a } => {
                    let y = &nodes[idx].value;
                    let (rows, cols) = (y.rows(), y.cols());
                    let mut da = Tensor::zeros(&[rows, cols]);
                    for r in 0..rows {
                        let dot: f64 =
                            (0..cols).map(|c| dout.at(r, c) * y.at(r, c)).sum();
                        for c in 0..cols {
                            da.data_mut()[r * cols + c] = y.at(r, c) * (dout.at(r, c) - dot);
                        }
                    }
                    accum(grads, *a, da);
                }
                Op::LayerNorm { a, gain, bias, xhat, inv_std } => {
                    let (rows, cols) = (xhat.rows(), xhat.cols());
                    let g = nodes[gain.0].value.data();
                    let mut dgain = Tensor::zeros(&[cols]);
                    let mut dbias = Tensor::zeros(&[cols]);
                    let mut da = Tensor::zeros(&[rows, cols]);
                    for (r, &inv_r) in inv_std.iter().enumerate() {
                        let mut mean_t = 0.0;
                        let mut mean_tx = 0.0;
                        for (c, &gc) in g.iter().enumerate() {
                            let t = dout.at(r, c) * gc;
                            mean_t += t;
                            mean_tx += t * xhat.at(r, c);
                            dgain.data_mut()[c] += dout.at(r, c) * xhat.at(r, c);
                            dbias.data_mut()[c] += dout.at(r, c);
                        }
                        mean_t /= cols as f64;
                        mean_tx /= cols as f64;
                        for (c, &gc) in g.iter().enumerate() {
                            let t = dout.at(r, c) * gc;
                            da.data_mut()[r * cols + c] =
                                (t - mean_t - xhat.at(r, c) * mean_tx) * inv_r;
                        }
                    }
                    accum(grads, *a, da);
                    accum(grads, *gain, dgain);
                    accum(grads, *bias, dbias);
                }
                Op::Gelu { a } => {
                    let x = &nodes[a.0].value;
                    let mut da = dout;
                    for (g, &xv) in da.data_mut().iter_mut().zip(x.data().iter()) {
                        let u = GELU_C * (xv + GELU_A * xv * xv * xv);
                        let t = u.tanh();
                        let du = GELU_C * (1.0 + 3.0 * GELU_A * xv * xv);
                        *g *= 0.5 * (1.0 + t) + 0.5 * xv * (1.0 - t * t) * du;
                    }
                    accum(grads, *a, da);
                }
                Op::CrossEntropy { logits, probs, targets } => {
                    let scale = dout.data()[0] / targets.len() as f64;
                    let (rows, cols) = (probs.rows(), probs.cols());
                    let mut da = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        da.data_mut()[r * cols + t] -= 1.0;
                    }
                    for x in da.data_mut() {
                        *x *= scale;
                    }
                    debug_assert_eq!(rows, targets.len());
                    accum(grads, *logits, da);
                }
                Op::CausalAttention { q, k, v, heads, seq_len, attn } => {
                    let (heads, seq_len) = (*heads, *seq_len);
                    let d_model = nodes[q.0].value.cols();
                    let batch = nodes[q.0].value.rows() / seq_len;
                    let d_k = d_model / heads;
                    let scale = 1.0 / (d_k as f64).sqrt();
                    let vq = &nodes[q.0].value;
                    let vk = &nodes[k.0].value;
                    let vv = &nodes[v.0].value;
                    let mut dq = Tensor::zeros(&[batch * seq_len, d_model]);
                    let mut dk = Tensor::zeros(&[batch * seq_len, d_model]);
                    let mut dv = Tensor::zeros(&[batch * seq_len, d_model]);
                    let mut d_attn = vec![0.0f64; seq_len * seq_len];
                    let mut d_scores = vec![0.0f64; seq_len * seq_len];
                    for b in 0..batch {
                        for h in 0..heads {
                            let row0 = b * seq_len;
                            let col0 = h * d_k;
                            let block = &attn[(b * heads + h) * seq_len * seq_len
                                ..(b * heads + h + 1) * seq_len * seq_len];
                            // d_attn = dOut_bh · V_bhᵀ
                            gemm(
                                seq_len,
                                d_k,
                                seq_len,
                                1.0,
                                &dout.data()[row0 * d_model + col0..],
                                d_model as isize,
                                1,
                                &vv.data()[row0 * d_model + col0..],
                                1,
                                d_model as isize,
                                0.0,
                                &mut d_attn,
                                seq_len as isize,
                            );
                            // dV_bh += attnᵀ · dOut_bh
                            gemm(
                                seq_len,
                                seq_len,
                                d_k,
                                1.0,
                                block,
                                1,
                                seq_len as isize,
                                &dout.data()[row0 * d_model + col0..],
                                d_model as isize,
                                1,
                                1.0,
                                &mut dv.data_mut()[row0 * d_model + col0..],
                                d_model as isize,
                            );
                            // Softmax backward per row: masked entries have
                            // attn == 0, so their score grads vanish.
                            for i in 0..seq_len {
                                let a_row = &block[i * seq_len..(i + 1) * seq_len];
                                let d_row = &d_attn[i * seq_len..(i + 1) * seq_len];
                                let dot: f64 =
                                    a_row.iter().zip(d_row).map(|(a, d)| a * d).sum();
                                let out_row = &mut d_scores[i * seq_len..(i + 1) * seq_len];
                                for j in 0..seq_len {
                                    out_row[j] = a_row[j] * (d_row[j] - dot);
                                }
                            }
                            // dQ_bh += scale · dScores · K_bh
                            gemm(
                                seq_len,
                                seq_len,
                                d_k,
                                scale,
                                &d_scores,
                                seq_len as isize,
                                1,
                                &vk.data()[row0 * d_model + col0..],
                                d_model as isize,
                                1,
                                1.0,
                                &mut dq.data_mut()[row0 * d_model + col0..],
                                d_model as isize,
                            );
                            // dK_bh += scale · dScoresᵀ · Q_bh
                            gemm(
                                seq_len,
                                seq_len,
                                d_k,
                                scale,
                                &d_scores,
                                1,
                                seq_len as isize,
                                &vq.data()[row0 * d_model + col0..],
                                d_model as isize,
                                1,
                                1.0,
                                &mut dk.data_mut()[row0 * d_model + col0..],
                                d_model as isize,
                            );
                        }
                    }
                    accum(grads, *q, dq);
                    accum(grads, *k, dk);
                    accum(grads, *v, dv);
                }
                Op::SumAll { a } => {
                    let v = &nodes[a.0].value;
                    let mut da = Tensor::zeros(v.shape());
                    let g = dout.data()[0];
                    for x in da.data_mut() {
                        *x = g;
                    }
                    accum(grads, *a, da);
                }
            }
        }
        Ok(())
    }
}

/// In-place, max-shifted softmax over one contiguous row.
fn softmax_row(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}
