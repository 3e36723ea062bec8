mod common;

use common::{central_difference, naive_attention, rng, uniform_matrix};
use hidden_dissent::tensor::{
    multi_head_block, self_attention, sigmoid, AttentionWeights, BlockWeights, Matrix, Tape, LN_EPS,
};
use hidden_dissent::Error;
use rand::Rng;

#[test]
fn sigmoid_at_zero_is_half() {
    assert_eq!(sigmoid(0.0), 0.5);
    let mut t = Tape::new();
    let x = t.constant(Matrix::zeros(1, 1));
    let y = t.sigmoid(x);
    assert_eq!(t.scalar(y), 0.5);
}

#[test]
fn layer_norm_of_constant_row_is_zero() {
    let mut t = Tape::new();
    let x = t.constant(Matrix::from_element(2, 6, 3.7));
    let y = t.layer_norm(x, LN_EPS);
    assert!(t.value(y).iter().all(|v| *v == 0.0));
}

#[test]
fn dense_sum_gradient_matches_finite_differences() {
    let mut r = rng(11);
    let x = uniform_matrix(5, 8, &mut r);
    let mut w = uniform_matrix(8, 8, &mut r);
    let mut b = uniform_matrix(1, 8, &mut r);
    let loss = |w: &Matrix, b: &Matrix| {
        let mut t = Tape::new();
        let xv = t.constant(x.clone());
        let wv = t.param(0, w);
        let bv = t.param(1, b);
        let d = t.dense(xv, wv, bv).unwrap();
        let s = t.sum(d);
        t.scalar(s)
    };
    let (gw, gb) = {
        let mut t = Tape::new();
        let xv = t.constant(x.clone());
        let wv = t.param(0, &w);
        let bv = t.param(1, &b);
        let d = t.dense(xv, wv, bv).unwrap();
        let s = t.sum(d);
        let g = t.backward(s);
        (g.get(wv).unwrap().clone(), g.get(bv).unwrap().clone())
    };
    let mut worst: f64 = 0.0;
    for k in 0..64 {
        let (i, j) = (k / 8, k % 8);
        let bref = b.clone();
        let fd = central_difference(&mut w, i, j, 1e-3, |w| loss(w, &bref));
        worst = worst.max((fd - gw[(i, j)]).abs());
    }
    for j in 0..8 {
        let wref = w.clone();
        let fd = central_difference(&mut b, 0, j, 1e-3, |b| loss(&wref, b));
        worst = worst.max((fd - gb[(0, j)]).abs());
    }
    assert!(worst < 1e-4, "max abs diff {worst}");
}

#[test]
fn every_op_matches_finite_differences() {
    for seed in 0..5 {
        let (worst, op) = common::checks::op_gradient_worst(seed);
        assert!(worst < 1e-4, "{op} seed {seed}: relative error {worst}");
    }
}

#[test]
fn bce_and_abs_error_gradients() {
    for &(z, y) in &[(0.3, 1.0), (-2.0, 0.0), (5.0, 0.0), (-0.7, 1.0)] {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::from_element(1, 1, z));
        let l = t.bce_with_logits(x, y).unwrap();
        let g = t.backward(l).get(x).unwrap()[(0, 0)];
        let p = sigmoid(z);
        let direct = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        assert!((t.scalar(l) - direct).abs() < 1e-12);
        assert!((g - (p - y)).abs() < 1e-12);
    }
    let mut t = Tape::new();
    let x = t.leaf(Matrix::from_element(1, 1, 0.2));
    let l = t.abs_error(x, 0.5).unwrap();
    assert!((t.scalar(l) - 0.3).abs() < 1e-15);
    assert_eq!(t.backward(l).get(x).unwrap()[(0, 0)], -1.0);
}

#[test]
fn single_row_attention_is_value_then_output_projection() {
    let mut r = rng(3);
    let w = AttentionWeights::random(48, 4, &mut r).unwrap();
    let x = uniform_matrix(1, 48, &mut r);
    let out = self_attention(&x, &w, &[false]).unwrap();
    let want = &x * &w.value * &w.output;
    assert!((out - want).abs().max() < 1e-12);
}

#[test]
fn identical_rows_give_identical_outputs() {
    let mut r = rng(4);
    let w = AttentionWeights::random(48, 8, &mut r).unwrap();
    let row = uniform_matrix(1, 48, &mut r);
    let x = Matrix::from_fn(2, 48, |_, j| row[(0, j)]);
    let out = self_attention(&x, &w, &[false, false]).unwrap();
    assert!((out.row(0) - out.row(1)).abs().max() < 1e-14);
}

#[test]
fn attention_matches_naive_loop_at_full_width() {
    let mut r = rng(5);
    let w = AttentionWeights::random(768, 8, &mut r).unwrap();
    let x = uniform_matrix(4, 768, &mut r);
    let mask = [false, false, true, false];
    let fast = self_attention(&x, &w, &mask).unwrap();
    let slow = naive_attention(&x, &w.query, &w.key, &w.value, &w.output, 8, &mask);
    assert!((fast - slow).abs().max() < 1e-5);
}

#[test]
fn softmax_rows_sum_to_one_over_unmasked_keys() {
    let mut r = rng(6);
    let mask = [false, true, false, false, true, false];
    let mut t = Tape::new();
    let x = t.constant(uniform_matrix(6, 6, &mut r) * 10.0);
    let s = t.masked_softmax(x, &mask).unwrap();
    for row in t.value(s).row_iter() {
        assert!((row.sum() - 1.0).abs() < 1e-9);
        assert_eq!(row[1], 0.0);
        assert_eq!(row[4], 0.0);
    }
}

#[test]
fn all_masked_attention_errors() {
    let mut r = rng(7);
    let w = AttentionWeights::random(16, 4, &mut r).unwrap();
    let x = uniform_matrix(3, 16, &mut r);
    assert!(matches!(self_attention(&x, &w, &[true, true, true]), Err(Error::EmptyAttention)));
}

#[test]
fn heads_must_divide_width() {
    let mut r = rng(8);
    assert!(AttentionWeights::random(768, 12, &mut r).is_ok());
    assert!(AttentionWeights::random(100, 8, &mut r).is_err());
}

#[test]
fn masked_query_rows_are_zero_and_padding_is_inert() {
    let mut r = rng(9);
    let w = BlockWeights::with_identity_norm(AttentionWeights::random(32, 4, &mut r).unwrap());
    let mask = [false, false, false, true, true];
    let mut x = uniform_matrix(5, 32, &mut r);
    let att = self_attention(&x, &w.attention, &mask).unwrap();
    assert!(att.row(3).iter().chain(att.row(4).iter()).all(|v| *v == 0.0));
    let before = multi_head_block(&x, &w, &mask).unwrap();
    for j in 0..32 {
        x[(3, j)] = r.random_range(-5.0..5.0);
        x[(4, j)] = r.random_range(-5.0..5.0);
    }
    let after = multi_head_block(&x, &w, &mask).unwrap();
    for i in 0..3 {
        assert_eq!(before.row(i), after.row(i));
    }
}

#[test]
fn zero_value_projection_leaves_layer_norm_of_input() {
    let mut r = rng(10);
    let mut att = AttentionWeights::random(24, 4, &mut r).unwrap();
    att.value.fill(0.0);
    let w = BlockWeights::with_identity_norm(att);
    let x = uniform_matrix(3, 24, &mut r);
    let out = multi_head_block(&x, &w, &[false; 3]).unwrap();
    let mut t = Tape::new();
    let xv = t.constant(x);
    let ln = t.layer_norm(xv, LN_EPS);
    assert!((out - t.value(ln)).abs().max() < 1e-14);
}

#[test]
fn two_stacked_blocks_match_finite_differences() {
    let worst = common::checks::stacked_blocks_gradient_worst(0);
    assert!(worst < 1e-4, "relative error {worst}");
}

#[test]
fn attention_matches_naive_loop_on_random_shapes() {
    let worst = common::checks::attention_oracle_worst(100, 21);
    assert!(worst < 1e-10, "max abs diff {worst}");
}

#[test]
fn dropout_fraction_within_binomial_bounds() {
    let mut r = rng(13);
    let n = 200 * 50;
    for &rate in &[0.4, 0.735, 0.8] {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_element(200, 50, 1.0));
        let y = t.dropout(x, rate, true, &mut r).unwrap();
        let zeros = t.value(y).iter().filter(|v| **v == 0.0).count() as f64;
        let sd = (n as f64 * rate * (1.0 - rate)).sqrt();
        assert!((zeros - n as f64 * rate).abs() < 3.0 * sd, "rate {rate}: {zeros} zeros");
        let keep = 1.0 / (1.0 - rate);
        assert!(t.value(y).iter().all(|v| *v == 0.0 || (*v - keep).abs() < 1e-12));
        let e = t.dropout(x, rate, false, &mut r).unwrap();
        assert_eq!(e, x);
    }
    let mut t = Tape::new();
    let x = t.constant(Matrix::zeros(1, 1));
    assert!(t.dropout(x, 1.0, true, &mut r).is_err());
}
