//! Forward-value contracts for every graph operation, checked against
//! hand-computed or independently computed references.

use cayley_nn::{Graph, NnError, Tensor};

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

#[test]
fn softmax_of_equal_logits_is_uniform() {
    let mut g = Graph::new();
    let x = g.leaf(matrix(1, 3, &[0.0, 0.0, 0.0]));
    let y = g.softmax(x).unwrap();
    for &v in g.value(y).data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15, "expected 1/3, got {v}");
    }
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut g = Graph::new();
    let x = g.leaf(pseudo_random(17, 29, 7));
    let y = g.softmax(x).unwrap();
    let v = g.value(y);
    for r in 0..17 {
        let sum: f64 = (0..29).map(|c| v.at(r, c)).sum();
        assert!((sum - 1.0).abs() < 1e-12, "row {r} sums to {sum}");
    }
}

#[test]
fn matmul_matches_hand_product() {
    let mut g = Graph::new();
    let a = g.leaf(matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    let b = g.leaf(matrix(2, 2, &[5.0, 6.0, 7.0, 8.0]));
    let c = g.matmul(a, b).unwrap();
    assert_eq!(g.value(c).data(), &[19.0, 22.0, 43.0, 50.0]);
}

#[test]
fn matmul_nt_matches_explicit_transpose() {
    let a = pseudo_random(4, 6, 11);
    let b = pseudo_random(5, 6, 13);
    let mut b_t_data = vec![0.0; 30];
    for r in 0..5 {
        for c in 0..6 {
            b_t_data[c * 5 + r] = b.at(r, c);
        }
    }
    let mut g = Graph::new();
    let na = g.leaf(a);
    let nb = g.leaf(b);
    let nbt = g.leaf(matrix(6, 5, &b_t_data));
    let via_nt = g.matmul_nt(na, nb).unwrap();
    let via_t = g.matmul(na, nbt).unwrap();
    assert_eq!(g.value(via_nt), g.value(via_t));
}

#[test]
fn cross_entropy_matches_frozen_reference() {
    // Computed independently with 30-digit arithmetic:
    // CE([2, -1, 0.5], target 0) = logsumexp - logit[0].
    let mut g = Graph::new();
    let x = g.leaf(matrix(1, 3, &[2.0, -1.0, 0.5]));
    let loss = g.cross_entropy(x, &[0]).unwrap();
    let got = g.value(loss).data()[0];
    assert!(
        (got - 0.241_311_296_657_157_06).abs() < 1e-14,
        "CE mismatch: {got}"
    );
}

#[test]
fn cross_entropy_of_large_margin_is_near_zero() {
    let mut g = Graph::new();
    let x = g.leaf(matrix(2, 4, &[30.0, 0.0, 0.0, 0.0, 0.0, 0.0, 30.0, 0.0]));
    let loss = g.cross_entropy(x, &[0, 2]).unwrap();
    let got = g.value(loss).data()[0];
    assert!((0.0..1e-4).contains(&got), "expected ~0 loss, got {got}");
}

#[test]
fn cross_entropy_of_uniform_logits_is_ln_k() {
    let mut g = Graph::new();
    let x = g.leaf(Tensor::zeros(&[3, 11]));
    let loss = g.cross_entropy(x, &[0, 5, 10]).unwrap();
    let got = g.value(loss).data()[0];
    assert!((got - (11f64).ln()).abs() < 1e-14, "expected ln 11, got {got}");
}

#[test]
fn layer_norm_rows_have_zero_mean_unit_variance() {
    let rows = 9;
    let cols = 32;
    let mut g = Graph::new();
    let mut x = pseudo_random(rows, cols, 17);
    // Stretch rows so the input is far from normalized.
    for (i, v) in x.data_mut().iter_mut().enumerate() {
        *v = *v * ((i / cols + 1) as f64) + 3.0;
    }
    let gain = g.leaf(matrix(1, cols, &vec![1.0; cols]));
    let bias = g.leaf(Tensor::zeros(&[1, cols]));
    let nx = g.leaf(x);
    let y = g.layer_norm(nx, gain, bias).unwrap();
    let v = g.value(y);
    for r in 0..rows {
        let mean: f64 = (0..cols).map(|c| v.at(r, c)).sum::<f64>() / cols as f64;
        let var: f64 =
            (0..cols).map(|c| (v.at(r, c) - mean).powi(2)).sum::<f64>() / cols as f64;
        assert!(mean.abs() < 1e-9, "row {r} mean {mean}");
        assert!((var - 1.0).abs() < 1e-6, "row {r} variance {var}");
    }
}

#[test]
fn layer_norm_applies_gain_and_bias() {
    let mut g = Graph::new();
    let x = g.leaf(matrix(1, 4, &[1.0, 2.0, 3.0, 4.0]));
    let gain = g.leaf(matrix(1, 4, &[2.0, 2.0, 2.0, 2.0]));
    let bias = g.leaf(matrix(1, 4, &[10.0, 10.0, 10.0, 10.0]));
    let unit_gain = g.leaf(matrix(1, 4, &[1.0, 1.0, 1.0, 1.0]));
    let zero_bias = g.leaf(Tensor::zeros(&[1, 4]));
    let plain = g.layer_norm(x, unit_gain, zero_bias).unwrap();
    let scaled = g.layer_norm(x, gain, bias).unwrap();
    for c in 0..4 {
        let expected = g.value(plain).at(0, c) * 2.0 + 10.0;
        assert!((g.value(scaled).at(0, c) - expected).abs() < 1e-12);
    }
}

#[test]
fn gelu_matches_frozen_reference() {
    // Values computed independently with 30-digit arithmetic for the
    // tanh approximation 0.5·x·(1 + tanh(√(2/π)(x + 0.044715·x³))).
    let inputs = [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let expected = [
        -0.003_637_392_081_773_018_8,
        -0.158_808_009_391_723_3,
        -0.154_285_990_174_856_09,
        0.0,
        0.345_714_009_825_143_94,
        0.841_191_990_608_276_7,
        1.954_597_694_087_775,
    ];
    let mut g = Graph::new();
    let x = g.leaf(matrix(1, 7, &inputs));
    let y = g.gelu(x).unwrap();
    for (i, (&got, &want)) in g.value(y).data().iter().zip(&expected).enumerate() {
        assert!(
            (got - want).abs() < 1e-15,
            "gelu({}) = {got}, want {want}",
            inputs[i]
        );
    }
}

#[test]
fn gather_slice_concat_round_trip() {
    let mut g = Graph::new();
    let table = g.leaf(matrix(4, 3, &[0., 1., 2., 10., 11., 12., 20., 21., 22., 30., 31., 32.]));
    let picked = g.gather_rows(table, &[3, 1, 1]).unwrap();
    assert_eq!(g.value(picked).data(), &[30., 31., 32., 10., 11., 12., 10., 11., 12.]);

    let rows = g.slice_rows(picked, 1, 2).unwrap();
    assert_eq!(g.value(rows).data(), &[10., 11., 12., 10., 11., 12.]);

    let left = g.slice_cols(rows, 0, 1).unwrap();
    let right = g.slice_cols(rows, 1, 2).unwrap();
    let back = g.concat_cols(&[left, right]).unwrap();
    assert_eq!(g.value(back), g.value(rows));
}

#[test]
fn add_bias_broadcasts_over_rows() {
    let mut g = Graph::new();
    let x = g.leaf(matrix(2, 3, &[1., 2., 3., 4., 5., 6.]));
    let b = g.leaf(matrix(1, 3, &[10., 20., 30.]));
    let y = g.add_bias(x, b).unwrap();
    assert_eq!(g.value(y).data(), &[11., 22., 33., 14., 25., 36.]);
}

#[test]
fn scale_and_add_are_elementwise() {
    let mut g = Graph::new();
    let x = g.leaf(matrix(1, 3, &[1., -2., 4.]));
    let y = g.leaf(matrix(1, 3, &[0.5, 0.5, 0.5]));
    let s = g.scale(x, -2.0).unwrap();
    let sum = g.add(s, y).unwrap();
    assert_eq!(g.value(sum).data(), &[-1.5, 4.5, -7.5]);
}

#[test]
fn causal_attention_with_constant_queries_averages_prefixes() {
    // With q = k = 0 the scores are all zero, the causal mask leaves row i
    // with a uniform distribution over positions 0..=i, so each output row
    // must equal the running mean of the value rows, per head.
    let seq_len = 4;
    let d_model = 6;
    let heads = 2;
    let v = pseudo_random(seq_len, d_model, 23);
    let mut g = Graph::new();
    let q = g.leaf(Tensor::zeros(&[seq_len, d_model]));
    let k = g.leaf(Tensor::zeros(&[seq_len, d_model]));
    let nv = g.leaf(v.clone());
    let out = g.causal_attention(q, k, nv, heads, seq_len).unwrap();
    for i in 0..seq_len {
        for c in 0..d_model {
            let mean: f64 = (0..=i).map(|j| v.at(j, c)).sum::<f64>() / (i + 1) as f64;
            let got = g.value(out).at(i, c);
            assert!(
                (got - mean).abs() < 1e-12,
                "row {i} col {c}: got {got}, want prefix mean {mean}"
            );
        }
    }
}

#[test]
fn causal_attention_ignores_future_positions() {
    let seq_len = 5;
    let d_model = 8;
    let heads = 4;
    let q = pseudo_random(seq_len, d_model, 31);
    let k = pseudo_random(seq_len, d_model, 37);
    let v = pseudo_random(seq_len, d_model, 41);

    let run = |v_tail: f64| -> Vec<f64> {
        let mut v2 = v.clone();
        // Overwrite the final position's q/k/v; earlier rows must not move.
        for c in 0..d_model {
            v2.data_mut()[(seq_len - 1) * d_model + c] = v_tail;
        }
        let mut q2 = q.clone();
        let mut k2 = k.clone();
        for c in 0..d_model {
            q2.data_mut()[(seq_len - 1) * d_model + c] = -v_tail;
            k2.data_mut()[(seq_len - 1) * d_model + c] = 2.0 * v_tail;
        }
        let mut g = Graph::new();
        let nq = g.leaf(q2);
        let nk = g.leaf(k2);
        let nv = g.leaf(v2);
        let out = g.causal_attention(nq, nk, nv, heads, seq_len).unwrap();
        g.value(out).data().to_vec()
    };

    let base = run(0.25);
    let changed = run(-3.0);
    let prefix = (seq_len - 1) * d_model;
    assert_eq!(&base[..prefix], &changed[..prefix], "future leaked into past");
    assert_ne!(&base[prefix..], &changed[prefix..], "final row should differ");
}

#[test]
fn causal_attention_handles_multiple_sequences_independently() {
    let seq_len = 3;
    let d_model = 4;
    let a = pseudo_random(seq_len, d_model, 51);
    let b = pseudo_random(seq_len, d_model, 53);

    let single = |t: &Tensor| -> Vec<f64> {
        let mut g = Graph::new();
        let n = g.leaf(t.clone());
        let out = g.causal_attention(n, n, n, 2, seq_len).unwrap();
        g.value(out).data().to_vec()
    };
    let mut stacked_data = a.data().to_vec();
    stacked_data.extend_from_slice(b.data());
    let stacked = matrix(2 * seq_len, d_model, &stacked_data);
    let mut g = Graph::new();
    let n = g.leaf(stacked);
    let out = g.causal_attention(n, n, n, 2, seq_len).unwrap();
    let got = g.value(out).data();
    let want: Vec<f64> = single(&a).into_iter().chain(single(&b)).collect();
    assert_eq!(got, &want[..], "batched attention differs from per-sequence");
}

#[test]
fn forward_is_bitwise_deterministic() {
    let run = || -> Vec<u64> {
        let mut g = Graph::new();
        let x = g.leaf(pseudo_random(6, 8, 61));
        let w = g.leaf(pseudo_random(8, 8, 67));
        let gain = g.leaf(matrix(1, 8, &[1.0; 8]));
        let bias = g.leaf(Tensor::zeros(&[1, 8]));
        let h = g.matmul(x, w).unwrap();
        let h = g.gelu(h).unwrap();
        let h = g.layer_norm(h, gain, bias).unwrap();
        let h = g.causal_attention(h, h, h, 2, 3).unwrap();
        let loss = g.cross_entropy(h, &[0, 3, 5, 1, 2, 7]).unwrap();
        g.backward(loss).unwrap();
        let mut bits: Vec<u64> = g.value(h).data().iter().map(|v| v.to_bits()).collect();
        bits.extend(g.grad(x).unwrap().data().iter().map(|v| v.to_bits()));
        bits.push(g.value(loss).data()[0].to_bits());
        bits
    };
    assert_eq!(run(), run(), "two identical runs diverged");
}

#[test]
fn shape_errors_are_reported() {
    let mut g = Graph::new();
    let a = g.leaf(matrix(2, 3, &[0.0; 6]));
    let b = g.leaf(matrix(2, 3, &[0.0; 6]));
    assert!(matches!(g.matmul(a, b), Err(NnError::ShapeMismatch { op: "matmul", .. })));
    assert!(matches!(
        g.cross_entropy(a, &[0, 1, 2]),
        Err(NnError::ShapeMismatch { op: "cross_entropy", .. })
    ));
    assert!(matches!(
        g.cross_entropy(a, &[0, 3]),
        Err(NnError::ShapeMismatch { op: "cross_entropy", .. })
    ));
    assert!(matches!(
        g.causal_attention(a, a, a, 2, 4),
        Err(NnError::ShapeMismatch { op: "causal_attention", .. })
    ));
    assert!(matches!(g.gather_rows(a, &[2]), Err(NnError::ShapeMismatch { .. })));
    assert!(matches!(Tensor::new(vec![2, 2, 2], vec![0.0; 8]), Err(NnError::InvalidShape(_))));
}

#[test]
fn backward_rejects_non_scalar_loss() {
    let mut g = Graph::new();
    let x = g.leaf(matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    let y = g.scale(x, 2.0).unwrap();
    let err = g.backward(y).unwrap_err();
    assert!(matches!(err, NnError::NonScalarLoss { shape } if shape == vec![2, 2]));
}
