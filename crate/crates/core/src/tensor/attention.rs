//! Masked multi-head scaled dot-product self-attention and the post-norm
//! residual block built on it.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::tape::{Matrix, Tape, Var};
use crate::corpus::MAX_SENTENCES;
use crate::error::{Error, Result};

/// Layer-norm denominator offset; a constant row normalizes to zeros.
pub const LN_EPS: f64 = 1e-5;

/// Projection weights for one multi-head self-attention module.
///
/// `query`, `key` and `value` are `d x d`; head `h` uses the column block
/// `h * d/heads .. (h + 1) * d/heads` of each. `output` is `d x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub query: Matrix,
    pub key: Matrix,
    pub value: Matrix,
    pub output: Matrix,
    heads: usize,
}

impl AttentionWeights {
    pub fn new(query: Matrix, key: Matrix, value: Matrix, output: Matrix, heads: usize) -> Result<Self> {
        let d = query.nrows();
        check_heads(d, heads)?;
        for (name, m) in [("query", &query), ("key", &key), ("value", &value), ("output", &output)] {
            if m.shape() != (d, d) {
                return Err(Error::Dimension(format!("{name} projection is {:?}, expected ({d}, {d})", m.shape())));
            }
        }
        Ok(Self { query, key, value, output, heads })
    }

    /// Glorot-scaled Gaussian initialization.
    pub fn random<R: Rng + ?Sized>(d: usize, heads: usize, rng: &mut R) -> Result<Self> {
        check_heads(d, heads)?;
        let mut m = || glorot(d, d, rng);
        Self::new(m(), m(), m(), m(), heads)
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn model_dim(&self) -> usize {
        self.query.nrows()
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim() / self.heads
    }

    /// Query, key and value projections of head `h`, each `d x d/heads`.
    pub fn head_projections(&self, h: usize) -> (Matrix, Matrix, Matrix) {
        let dh = self.head_dim();
        let cols = |m: &Matrix| m.columns(h * dh, dh).into_owned();
        (cols(&self.query), cols(&self.key), cols(&self.value))
    }
}

pub(crate) fn check_heads(d: usize, heads: usize) -> Result<()> {
    if heads == 0 || d % heads != 0 {
        return Err(Error::Config(format!("{heads} heads do not divide model width {d}")));
    }
    Ok(())
}

pub(crate) fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let sd = (2.0 / (rows + cols) as f64).sqrt();
    let normal = Normal::new(0.0, sd).expect("positive sd");
    Matrix::from_fn(rows, cols, |_, _| normal.sample(rng))
}

/// An attention module followed by a residual add and an affine layer norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub attention: AttentionWeights,
    /// `1 x d` layer-norm gain.
    pub norm_gain: Matrix,
    /// `1 x d` layer-norm shift.
    pub norm_bias: Matrix,
}

impl BlockWeights {
    pub fn with_identity_norm(attention: AttentionWeights) -> Self {
        let d = attention.model_dim();
        Self {
            attention,
            norm_gain: Matrix::from_element(1, d, 1.0),
            norm_bias: Matrix::zeros(1, d),
        }
    }
}

/// Tape handles for an attention module's projections.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub query: Var,
    pub key: Var,
    pub value: Var,
    pub output: Var,
}

/// Records masked multi-head attention of `x` (`n x d`) on `tape`.
///
/// Scores are scaled by `1 / sqrt(d / heads)`; masked keys get zero weight
/// and masked query rows of the output are zero.
pub fn attend(tape: &mut Tape<'_>, x: Var, w: AttentionVars, heads: usize, mask: &[bool]) -> Result<Var> {
    let (n, d) = tape.value(x).shape();
    if mask.len() != n {
        return Err(Error::Dimension(format!("mask length {} for {n} rows", mask.len())));
    }
    if n > MAX_SENTENCES {
        return Err(Error::Dimension(format!("{n} rows exceeds {MAX_SENTENCES}")));
    }
    check_heads(d, heads)?;
    if mask.iter().all(|&m| m) {
        return Err(Error::EmptyAttention);
    }
    let dh = d / heads;
    let q = tape.matmul(x, w.query)?;
    let k = tape.matmul(x, w.key)?;
    let v = tape.matmul(x, w.value)?;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = tape.cols(q, h * dh, dh)?;
        let kh = tape.cols(k, h * dh, dh)?;
        let vh = tape.cols(v, h * dh, dh)?;
        let scores = tape.matmul_nt(qh, kh)?;
        let scores = tape.scale(scores, scale);
        let weights = tape.masked_softmax(scores, mask)?;
        outs.push(tape.matmul(weights, vh)?);
    }
    let joined = if heads == 1 { outs[0] } else { tape.concat_cols(&outs)? };
    let projected = tape.matmul(joined, w.output)?;
    tape.zero_rows(projected, mask)
}

/// Records `layer_norm(x + attend(x)) * gain + bias` on `tape`.
pub fn residual_block(
    tape: &mut Tape<'_>,
    x: Var,
    w: AttentionVars,
    gain: Var,
    bias: Var,
    heads: usize,
    mask: &[bool],
) -> Result<Var> {
    let att = attend(tape, x, w, heads, mask)?;
    let sum = tape.add(x, att)?;
    let normed = tape.layer_norm(sum, LN_EPS);
    let scaled = tape.mul_row(normed, gain)?;
    tape.add_row(scaled, bias)
}

fn attention_vars<'p>(tape: &mut Tape<'p>, w: &'p AttentionWeights) -> AttentionVars {
    AttentionVars {
        query: tape.param(0, &w.query),
        key: tape.param(1, &w.key),
        value: tape.param(2, &w.value),
        output: tape.param(3, &w.output),
    }
}

/// Multi-head self-attention of `x` (`n x d`, `n <= 256`); `mask[i]` marks
/// row `i` as padding.
pub fn self_attention(x: &Matrix, w: &AttentionWeights, mask: &[bool]) -> Result<Matrix> {
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let vars = attention_vars(&mut tape, w);
    let out = attend(&mut tape, xv, vars, w.heads(), mask)?;
    Ok(tape.value(out).clone())
}

/// `layer_norm(x + self_attention(x))` followed by the block's affine transform.
pub fn multi_head_block(x: &Matrix, w: &BlockWeights, mask: &[bool]) -> Result<Matrix> {
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let vars = attention_vars(&mut tape, &w.attention);
    let gain = tape.param(4, &w.norm_gain);
    let bias = tape.param(5, &w.norm_bias);
    let out = residual_block(&mut tape, xv, vars, gain, bias, w.attention.heads(), mask)?;
    Ok(tape.value(out).clone())
}
