//! Gradient contracts: closed-form checks for the simple rules and
//! central-difference validation for every operation, ending with a full
//! two-layer transformer-shaped graph.

use std::time::Instant;

use cayley_nn::{grad_check, Graph, NnError, NodeId, Tensor};

const EPSILON: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn matrix(rows: usize, cols: usize, data: &[f64]) -> Tensor {
    Tensor::matrix(rows, cols, data.to_vec()).expect("test shape")
}

/// Deterministic pseudo-random fill in [-1, 1] (splitmix64 bit mixer).
fn pseudo_random(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut state = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let data: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
    matrix(rows, cols, &data)
}

/// Runs grad_check over every coordinate of `params` and asserts it passes.
fn assert_grads<F>(f: F, params: &[Tensor], what: &str)
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId, NnError>,
{
    let report = grad_check(&f, params, EPSILON, TOLERANCE, 0, 99).expect(what);
    assert!(
        report.passed,
        "{what}: max rel error {:.3e} at {:?}",
        report.max_rel_error, report.worst
    );
}

#[test]
fn derivative_of_x_squared_at_three_is_six() {
    // x·x built from two uses of the same 1×1 node: both product rules must
    // accumulate, giving d/dx x² = 2x = 6 at x = 3.
    let mut g = Graph::new();
    let x = g.leaf(Tensor::scalar(3.0));
    let y = g.matmul(x, x).unwrap();
    g.backward(y).unwrap();
    let got = g.grad(x).unwrap().data()[0];
    assert!((got - 6.0).abs() < 1e-12, "d/dx x^2 at 3 = {got}");
}

#[test]
fn cross_entropy_gradient_is_softmax_minus_onehot() {
    let logits = matrix(2, 5, &[1.2, -0.3, 0.8, 2.0, -1.5, 0.0, 0.4, -0.9, 0.1, 1.1]);
    let targets = [3usize, 1];
    let mut g = Graph::new();
    let x = g.leaf(logits.clone());
    let loss = g.cross_entropy(x, &targets).unwrap();
    g.backward(loss).unwrap();
    let grad = g.grad(x).unwrap();

    let mut sm = Graph::new();
    let nx = sm.leaf(logits);
    let probs = sm.softmax(nx).unwrap();
    let probs = sm.value(probs);
    for (r, &t) in targets.iter().enumerate() {
        for c in 0..5 {
            let onehot = if c == t { 1.0 } else { 0.0 };
            let want = (probs.at(r, c) - onehot) / targets.len() as f64;
            let got = grad.at(r, c);
            assert!(
                (got - want).abs() < 1e-12,
                "row {r} col {c}: got {got}, want {want}"
            );
        }
    }
}

#[test]
fn unreached_nodes_keep_no_gradient() {
    let mut g = Graph::new();
    let used = g.leaf(Tensor::scalar(2.0));
    let unused = g.leaf(Tensor::scalar(5.0));
    let later = g.leaf(Tensor::scalar(7.0));
    let loss = g.matmul(used, used).unwrap();
    let _after = g.matmul(later, later).unwrap();
    g.backward(loss).unwrap();
    assert!(g.grad(used).is_some());
    assert!(g.grad(unused).is_none());
    assert!(g.grad(later).is_none());
}

#[test]
fn matmul_gradients_match_finite_differences() {
    let params = [pseudo_random(3, 4, 1), pseudo_random(4, 5, 2), pseudo_random(5, 1, 3)];
    assert_grads(
        |g, ids| {
            let prod = g.matmul(ids[0], ids[1])?;
            let read = g.matmul(prod, ids[2])?;
            g.sum_all(read)
        },
        &params,
        "matmul",
    );
}

#[test]
fn matmul_nt_gradients_match_finite_differences() {
    let params = [pseudo_random(3, 4, 4), pseudo_random(6, 4, 5), pseudo_random(6, 1, 6)];
    assert_grads(
        |g, ids| {
            let prod = g.matmul_nt(ids[0], ids[1])?;
            let read = g.matmul(prod, ids[2])?;
            g.sum_all(read)
        },
        &params,
        "matmul_nt",
    );
}

#[test]
fn add_scale_bias_gradients_match_finite_differences() {
    let params = [pseudo_random(3, 4, 7), pseudo_random(3, 4, 8), pseudo_random(1, 4, 9)];
    assert_grads(
        |g, ids| {
            let sum = g.add(ids[0], ids[1])?;
            let scaled = g.scale(sum, -1.7)?;
            let biased = g.add_bias(scaled, ids[2])?;
            let act = g.gelu(biased)?;
            g.sum_all(act)
        },
        &params,
        "add/scale/add_bias/gelu",
    );
}

#[test]
fn concat_and_slice_gradients_match_finite_differences() {
    let params = [pseudo_random(3, 2, 10), pseudo_random(3, 3, 11), pseudo_random(3, 5, 12)];
    assert_grads(
        |g, ids| {
            let joined = g.concat_cols(&[ids[0], ids[1]])?;
            let mixed = g.add(joined, ids[2])?;
            let left = g.slice_cols(mixed, 1, 3)?;
            let rows = g.slice_rows(left, 0, 2)?;
            let act = g.gelu(rows)?;
            g.sum_all(act)
        },
        &params,
        "concat_cols/slice_cols/slice_rows",
    );
}

#[test]
fn gather_rows_accumulates_duplicate_indices() {
    // Index 1 appears three times; its gradient must be the sum of all
    // three output-row gradients — the embedding-table case.
    let params = [pseudo_random(4, 3, 13), pseudo_random(3, 1, 14)];
    assert_grads(
        |g, ids| {
            let picked = g.gather_rows(ids[0], &[1, 3, 1, 1, 0])?;
            let act = g.gelu(picked)?;
            let read = g.matmul(act, ids[1])?;
            g.sum_all(read)
        },
        &params,
        "gather_rows",
    );
}

#[test]
fn softmax_gradients_match_finite_differences() {
    // Sum-of-row readouts are blind to softmax (rows always sum to 1), so a
    // weighted readout keeps the check meaningful.
    let params = [pseudo_random(4, 6, 15), pseudo_random(6, 1, 16)];
    assert_grads(
        |g, ids| {
            let probs = g.softmax(ids[0])?;
            let read = g.matmul(probs, ids[1])?;
            g.sum_all(read)
        },
        &params,
        "softmax",
    );
}

#[test]
fn layer_norm_gradients_match_finite_differences() {
    let params = [pseudo_random(5, 8, 17), pseudo_random(1, 8, 18), pseudo_random(1, 8, 19)];
    assert_grads(
        |g, ids| {
            let normed = g.layer_norm(ids[0], ids[1], ids[2])?;
            let act = g.gelu(normed)?;
            g.sum_all(act)
        },
        &params,
        "layer_norm",
    );
}

#[test]
fn cross_entropy_gradients_match_finite_differences() {
    let params = [pseudo_random(4, 7, 20)];
    assert_grads(
        |g, ids| g.cross_entropy(ids[0], &[2, 0, 6, 3]),
        &params,
        "cross_entropy",
    );
}

#[test]
fn causal_attention_gradients_match_finite_differences() {
    let seq_len = 4;
    let d_model = 6;
    let params = [
        pseudo_random(2 * seq_len, d_model, 21),
        pseudo_random(2 * seq_len, d_model, 22),
        pseudo_random(2 * seq_len, d_model, 23),
        pseudo_random(d_model, 1, 24),
    ];
    assert_grads(
        |g, ids| {
            let out = g.causal_attention(ids[0], ids[1], ids[2], 2, seq_len)?;
            let read = g.matmul(out, ids[3])?;
            g.sum_all(read)
        },
        &params,
        "causal_attention",
    );
}

#[test]
fn two_layer_model_gradients_stay_within_tolerance() {
    // A miniature but complete decoder stack: embeddings, two pre-LN
    // attention + MLP blocks, final norm, tied readout, cross-entropy.
    // Every parameter coordinate is compared against central differences.
    let vocab = 12;
    let d_model = 8;
    let heads = 2;
    let seq_len = 4;
    let batch = 2;
    let d_ff = 16;
    let tokens: Vec<usize> = vec![3, 7, 1, 11, 5, 0, 9, 2];
    let positions: Vec<usize> = (0..batch).flat_map(|_| 0..seq_len).collect();
    let targets = [4usize, 8];
    let answer_rows = [seq_len - 1, 2 * seq_len - 1];

    let mut params: Vec<Tensor> = vec![
        pseudo_random(vocab, d_model, 100),  // 0: token embeddings (tied head)
        pseudo_random(seq_len, d_model, 101), // 1: positional embeddings
    ];
    let mut seed = 102;
    for _ in 0..2 {
        for _ in 0..4 {
            params.push(pseudo_random(d_model, d_model, seed)); // wq wk wv wo
            seed += 1;
        }
        for _ in 0..2 {
            params.push(pseudo_random(1, d_model, seed)); // ln gain, ln bias
            seed += 1;
        }
        params.push(pseudo_random(d_model, d_ff, seed)); // fc1
        seed += 1;
        params.push(pseudo_random(1, d_ff, seed)); // fc1 bias
        seed += 1;
        params.push(pseudo_random(d_ff, d_model, seed)); // fc2
        seed += 1;
        params.push(pseudo_random(1, d_model, seed)); // fc2 bias
        seed += 1;
        params.push(pseudo_random(1, d_model, seed)); // ln2 gain
        seed += 1;
        params.push(pseudo_random(1, d_model, seed)); // ln2 bias
        seed += 1;
    }
    params.push(pseudo_random(1, d_model, seed)); // final ln gain
    params.push(pseudo_random(1, d_model, seed + 1)); // final ln bias

    let coords: usize = params.iter().map(Tensor::numel).sum();
    assert!(coords >= 200, "model too small to be a meaningful check");

    let forward = |g: &mut Graph, ids: &[NodeId]| -> Result<NodeId, NnError> {
        let tok = g.gather_rows(ids[0], &tokens)?;
        let pos = g.gather_rows(ids[1], &positions)?;
        let mut h = g.add(tok, pos)?;
        for layer in 0..2 {
            let p = 2 + layer * 12;
            let normed = g.layer_norm(h, ids[p + 4], ids[p + 5])?;
            let q = g.matmul(normed, ids[p])?;
            let k = g.matmul(normed, ids[p + 1])?;
            let v = g.matmul(normed, ids[p + 2])?;
            let attn = g.causal_attention(q, k, v, heads, seq_len)?;
            let proj = g.matmul(attn, ids[p + 3])?;
            h = g.add(h, proj)?;
            let normed = g.layer_norm(h, ids[p + 10], ids[p + 11])?;
            let up = g.matmul(normed, ids[p + 6])?;
            let up = g.add_bias(up, ids[p + 7])?;
            let act = g.gelu(up)?;
            let down = g.matmul(act, ids[p + 8])?;
            let down = g.add_bias(down, ids[p + 9])?;
            h = g.add(h, down)?;
        }
        let normed = g.layer_norm(h, ids[26], ids[27])?;
        let answers = g.gather_rows(normed, &answer_rows)?;
        let logits = g.matmul_nt(answers, ids[0])?;
        g.cross_entropy(logits, &targets)
    };

    let start = Instant::now();
    let report = grad_check(forward, &params, EPSILON, TOLERANCE, 0, 7).expect("model builds");
    assert!(
        report.coords_checked >= 200,
        "only {} coordinates checked",
        report.coords_checked
    );
    assert!(
        report.passed,
        "max rel error {:.3e} at {:?}",
        report.max_rel_error, report.worst
    );
    assert!(
        start.elapsed().as_secs() < 30,
        "grad check took {:?}",
        start.elapsed()
    );
}

#[test]
fn sampled_grad_check_is_deterministic_and_bounded() {
    let params = [pseudo_random(10, 10, 40), pseudo_random(10, 10, 41)];
    let f = |g: &mut Graph, ids: &[NodeId]| -> Result<NodeId, NnError> {
        let prod = g.matmul(ids[0], ids[1])?;
        let act = g.gelu(prod)?;
        g.sum_all(act)
    };
    let a = grad_check(f, &params, EPSILON, TOLERANCE, 7, 123).unwrap();
    let b = grad_check(f, &params, EPSILON, TOLERANCE, 7, 123).unwrap();
    assert_eq!(a, b, "same seed must sample the same coordinates");
    assert_eq!(a.coords_checked, 14, "7 samples per 100-element parameter");
    assert!(a.passed);
    let wider = grad_check(f, &params, EPSILON, TOLERANCE, 500, 123).unwrap();
    assert_eq!(wider.coords_checked, 200, "oversampling clamps to every coordinate");
}
