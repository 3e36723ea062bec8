//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod checks;
pub mod cli;
pub mod sim;

use hidden_dissent::corpus::{EmbeddedTranscript, EMBED_DIM};
use hidden_dissent::tensor::{Matrix, ParamSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Direct loop evaluation of masked multi-head attention:
/// per head, `softmax(Q K^T / sqrt(d_head)) V` with masked keys at -inf,
/// heads concatenated, projected by `W_O`, masked query rows zeroed.
pub fn naive_attention(
    x: &Matrix,
    wq: &Matrix,
    wk: &Matrix,
    wv: &Matrix,
    wo: &Matrix,
    heads: usize,
    mask: &[bool],
) -> Matrix {
    let n = x.nrows();
    let d = wq.ncols();
    let dh = d / heads;
    let proj = |w: &Matrix, i: usize, c: usize| -> f64 {
        (0..x.ncols()).map(|k| x[(i, k)] * w[(k, c)]).sum()
    };
    let mut concat = vec![vec![0.0; d]; n];
    for h in 0..heads {
        let off = h * dh;
        for i in 0..n {
            let mut scores = vec![f64::NEG_INFINITY; n];
            for j in 0..n {
                if mask[j] {
                    continue;
                }
                let mut s = 0.0;
                for c in 0..dh {
                    s += proj(wq, i, off + c) * proj(wk, j, off + c);
                }
                scores[j] = s / (dh as f64).sqrt();
            }
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            for c in 0..dh {
                let mut acc = 0.0;
                for j in 0..n {
                    if !mask[j] {
                        acc += exps[j] / total * proj(wv, j, off + c);
                    }
                }
                concat[i][off + c] = acc;
            }
        }
    }
    let mut out = Matrix::zeros(n, wo.ncols());
    for i in 0..n {
        if mask[i] {
            continue;
        }
        for c in 0..wo.ncols() {
            out[(i, c)] = (0..d).map(|k| concat[i][k] * wo[(k, c)]).sum();
        }
    }
    out
}

/// Central finite difference of `f` with respect to entry `(i, j)` of `m`.
pub fn central_difference(
    m: &mut Matrix,
    i: usize,
    j: usize,
    step: f64,
    mut f: impl FnMut(&Matrix) -> f64,
) -> f64 {
    let orig = m[(i, j)];
    m[(i, j)] = orig + step;
    let up = f(m);
    m[(i, j)] = orig - step;
    let down = f(m);
    m[(i, j)] = orig;
    (up - down) / (2.0 * step)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation by the two-pass formula.
pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

pub fn random_doc(meeting: &str, member: &str, n: usize, rng: &mut ChaCha8Rng) -> EmbeddedTranscript {
    let rows: Vec<f32> = (0..n * EMBED_DIM).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    EmbeddedTranscript::new(meeting, member, rows).unwrap()
}

/// Document whose every sentence is `center + noise * U(-1, 1)`.
pub fn clustered_doc(id: &str, center: &[f32], noise: f32, n: usize, rng: &mut ChaCha8Rng) -> EmbeddedTranscript {
    let mut rows = Vec::with_capacity(n * EMBED_DIM);
    for _ in 0..n {
        rows.extend(center.iter().map(|c| c + noise * rng.random_range(-1.0f32..1.0)));
    }
    EmbeddedTranscript::new("m", id, rows).unwrap()
}

fn naive_layer_norm(x: &Matrix, gain: &Matrix, shift: &Matrix) -> Matrix {
    let mut out = x.clone();
    for i in 0..x.nrows() {
        let n = x.ncols() as f64;
        let mean = (0..x.ncols()).map(|j| x[(i, j)]).sum::<f64>() / n;
        let var = (0..x.ncols()).map(|j| (x[(i, j)] - mean).powi(2)).sum::<f64>() / n;
        for j in 0..x.ncols() {
            out[(i, j)] = (x[(i, j)] - mean) / (var + 1e-5).sqrt() * gain[(0, j)] + shift[(0, j)];
        }
    }
    out
}

fn naive_dense_relu(x: &Matrix, w: &Matrix, b: &Matrix, relu: bool) -> Matrix {
    Matrix::from_fn(x.nrows(), w.ncols(), |i, j| {
        let v = b[(0, j)] + (0..x.ncols()).map(|k| x[(i, k)] * w[(k, j)]).sum::<f64>();
        if relu { v.max(0.0) } else { v }
    })
}

/// Straight-line eval-mode forward of one encoder branch, reading weights by name.
pub fn naive_branch(params: &ParamSet, prefix: &str, heads: usize, doc: &EmbeddedTranscript) -> Vec<f64> {
    let g = |name: &str| params.get(params.id(&format!("{prefix}.{name}")).unwrap()).clone();
    let x = doc.content_matrix();
    let mut h = naive_dense_relu(&x, &g("input.weight"), &g("input.bias"), true);
    h = naive_layer_norm(&h, &g("norm.gain"), &g("norm.shift"));
    let mask = vec![false; h.nrows()];
    let mut b = 0;
    while params.id(&format!("{prefix}.mhsa{b}.query")).is_some() {
        let blk = |w: &str| g(&format!("mhsa{b}.{w}"));
        let a = naive_attention(&h, &blk("query"), &blk("key"), &blk("value"), &blk("output"), heads, &mask);
        h = naive_layer_norm(&(&h + a), &blk("norm.gain"), &blk("norm.shift"));
        b += 1;
    }
    (0..h.ncols()).map(|j| (0..h.nrows()).map(|i| h[(i, j)]).sum::<f64>() / h.nrows() as f64).collect()
}

/// Straight-line head: ReLU hidden layer then scalar logit.
pub fn naive_head(params: &ParamSet, x: &[f64]) -> f64 {
    let g = |name: &str| params.get(params.id(name).unwrap()).clone();
    let xm = Matrix::from_row_slice(1, x.len(), x);
    let h = naive_dense_relu(&xm, &g("head.hidden.weight"), &g("head.hidden.bias"), true);
    naive_dense_relu(&h, &g("head.out.weight"), &g("head.out.bias"), false)[(0, 0)]
}

pub fn naive_classifier_probability(
    params: &ParamSet,
    heads: (usize, usize),
    chair: &EmbeddedTranscript,
    member: &EmbeddedTranscript,
) -> f64 {
    let c = naive_branch(params, "chair", heads.0, chair);
    let m = naive_branch(params, "member", heads.1, member);
    let diff: Vec<f64> = m.iter().zip(&c).map(|(a, b)| a - b).collect();
    1.0 / (1.0 + (-naive_head(params, &diff)).exp())
}

/// Vote examples whose member documents sit around `+center` (NO) or
/// `-center` (YES); chair documents are pure noise. With `merged` both
/// classes share one cluster, so the label carries no signal.
pub fn two_cluster_votes(n: usize, no_share: f64, merged: bool, seed: u64) -> Vec<hidden_dissent::nn::VoteExample> {
    let mut r = rng(seed);
    let center: Vec<f32> = (0..EMBED_DIM).map(|_| r.random_range(-1.0f32..1.0)).collect();
    let neg: Vec<f32> = center.iter().map(|c| -c).collect();
    let zero = vec![0.0f32; EMBED_DIM];
    let mut out = Vec::with_capacity(n);
    for id in 0..n {
        let label = u8::from(id < 2 || (id >= 4 && r.random_bool(no_share)));
        let c = if merged || label == 1 { &center } else { &neg };
        let member = clustered_doc(&format!("x{id}"), c, 1.0, 3, &mut r);
        let chair = clustered_doc(&format!("c{id}"), &zero, 1.0, 3, &mut r);
        out.push(hidden_dissent::nn::VoteExample {
            id,
            chair: std::sync::Arc::new(chair),
            member: std::sync::Arc::new(member),
            label,
        });
    }
    out
}

pub fn small_classifier(model_dim: usize, modules: usize, heads: usize, dropout: f64, lr0: f64, seed: u64) -> hidden_dissent::nn::ClassifierParams {
    let hyper = hidden_dissent::nn::HyperConfig {
        n_mhsa_chair: modules,
        n_mhsa_member: modules,
        heads_chair: heads,
        heads_member: heads,
        dropout,
        lr0,
    };
    hidden_dissent::nn::ClassifierParams::init(hidden_dissent::nn::ModelDims::with_model_dim(model_dim), hyper, seed).unwrap()
}

/// Trains a small classifier on the two-cluster data for fewer than 500
/// steps and returns the balanced accuracy on the original test split.
pub fn separable_accuracy(merged: bool, seed: u64) -> f64 {
    use hidden_dissent::train::{evaluate_set, split_and_oversample, train_model, TrainConfig};
    let data = two_cluster_votes(1000, 0.2, merged, seed);
    let split = split_and_oversample(&data, 0.8, seed).unwrap();
    let model = small_classifier(32, 1, 4, 0.4, 1e-3, seed);
    let cfg = TrainConfig { max_steps: 499, seed, ..TrainConfig::default() };
    let out = train_model(model, &split.train, &split.test, &cfg, 1e-3).unwrap();
    assert!(out.steps_run < 500);
    evaluate_set(&out.model, &split.test_original).unwrap().balanced_accuracy
}
