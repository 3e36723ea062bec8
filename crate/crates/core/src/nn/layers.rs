//! Parameter layouts shared by both architectures and the graph pieces that
//! read them.

use rand::Rng;

use super::config::ModelDims;
use crate::corpus::EmbeddedTranscript;
use crate::error::{Error, Result};
use crate::tensor::{check_heads, glorot, residual_block, AttentionVars, Matrix, ParamSet, Tape, Var, LN_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct DenseIds {
    pub weight: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct NormIds {
    pub gain: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BlockIds {
    pub query: usize,
    pub key: usize,
    pub value: usize,
    pub output: usize,
    pub norm: NormIds,
}

/// Sentence-level encoder: dense, layer norm, dropout, attention stack, pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BranchIds {
    pub input: DenseIds,
    pub norm: NormIds,
    pub blocks: Vec<BlockIds>,
    pub heads: usize,
}

/// Two dense layers ending in a scalar logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct HeadIds {
    pub hidden: DenseIds,
    pub out: DenseIds,
}

enum Init<'a, R: Rng + ?Sized> {
    Random(&'a mut R),
    Lookup,
}

fn slot<R: Rng + ?Sized>(
    params: &mut ParamSet,
    name: String,
    shape: (usize, usize),
    init: &mut Init<'_, R>,
    fill: impl FnOnce(&mut R) -> Matrix,
) -> Result<usize> {
    match init {
        Init::Random(rng) => params.insert(name, fill(rng)),
        Init::Lookup => {
            let id = params
                .id(&name)
                .ok_or_else(|| Error::Config(format!("checkpoint lacks parameter {name}")))?;
            if params.get(id).shape() != shape {
                return Err(Error::Dimension(format!(
                    "{name}: checkpoint shape {:?}, model expects {shape:?}",
                    params.get(id).shape()
                )));
            }
            Ok(id)
        }
    }
}

fn dense_slot<R: Rng + ?Sized>(
    params: &mut ParamSet,
    prefix: &str,
    rows: usize,
    cols: usize,
    init: &mut Init<'_, R>,
) -> Result<DenseIds> {
    Ok(DenseIds {
        weight: slot(params, format!("{prefix}.weight"), (rows, cols), init, |r| glorot(rows, cols, r))?,
        bias: slot(params, format!("{prefix}.bias"), (1, cols), init, |_| Matrix::zeros(1, cols))?,
    })
}

fn norm_slot<R: Rng + ?Sized>(params: &mut ParamSet, prefix: &str, d: usize, init: &mut Init<'_, R>) -> Result<NormIds> {
    Ok(NormIds {
        gain: slot(params, format!("{prefix}.gain"), (1, d), init, |_| Matrix::from_element(1, d, 1.0))?,
        bias: slot(params, format!("{prefix}.shift"), (1, d), init, |_| Matrix::zeros(1, d))?,
    })
}

fn branch_slots<R: Rng + ?Sized>(
    params: &mut ParamSet,
    prefix: &str,
    dims: ModelDims,
    n_blocks: usize,
    heads: usize,
    init: &mut Init<'_, R>,
) -> Result<BranchIds> {
    check_heads(dims.model_dim, heads)?;
    let d = dims.model_dim;
    let input = dense_slot(params, &format!("{prefix}.input"), dims.input_dim, d, init)?;
    let norm = norm_slot(params, &format!("{prefix}.norm"), d, init)?;
    let mut blocks = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let p = format!("{prefix}.mhsa{b}");
        let mut proj = |which: &str, init: &mut Init<'_, R>| {
            slot(params, format!("{p}.{which}"), (d, d), init, |r| glorot(d, d, r))
        };
        let query = proj("query", init)?;
        let key = proj("key", init)?;
        let value = proj("value", init)?;
        let output = proj("output", init)?;
        let norm = norm_slot(params, &format!("{p}.norm"), d, init)?;
        blocks.push(BlockIds { query, key, value, output, norm });
    }
    Ok(BranchIds { input, norm, blocks, heads })
}

fn head_slots<R: Rng + ?Sized>(params: &mut ParamSet, dims: ModelDims, init: &mut Init<'_, R>) -> Result<HeadIds> {
    Ok(HeadIds {
        hidden: dense_slot(params, "head.hidden", dims.model_dim, dims.head_hidden, init)?,
        out: dense_slot(params, "head.out", dims.head_hidden, 1, init)?,
    })
}

pub(crate) fn init_branch<R: Rng + ?Sized>(
    params: &mut ParamSet,
    prefix: &str,
    dims: ModelDims,
    n_blocks: usize,
    heads: usize,
    rng: &mut R,
) -> Result<BranchIds> {
    branch_slots(params, prefix, dims, n_blocks, heads, &mut Init::Random(rng))
}

pub(crate) fn lookup_branch(
    params: &mut ParamSet,
    prefix: &str,
    dims: ModelDims,
    n_blocks: usize,
    heads: usize,
) -> Result<BranchIds> {
    branch_slots::<rand_chacha::ChaCha8Rng>(params, prefix, dims, n_blocks, heads, &mut Init::Lookup)
}

pub(crate) fn init_head<R: Rng + ?Sized>(params: &mut ParamSet, dims: ModelDims, rng: &mut R) -> Result<HeadIds> {
    head_slots(params, dims, &mut Init::Random(rng))
}

pub(crate) fn lookup_head(params: &mut ParamSet, dims: ModelDims) -> Result<HeadIds> {
    head_slots::<rand_chacha::ChaCha8Rng>(params, dims, &mut Init::Lookup)
}

/// Records one branch on `tape` and returns the pooled `1 x d` document vector.
///
/// Only the populated rows enter the graph: padding rows are masked keys,
/// produce zero attention output and are excluded from the pool, so they
/// cannot influence the result.
pub(crate) fn encode<'p, R: Rng + ?Sized>(
    tape: &mut Tape<'p>,
    params: &'p ParamSet,
    ids: &BranchIds,
    doc: &EmbeddedTranscript,
    dropout: f64,
    train: bool,
    rng: &mut R,
) -> Result<Var> {
    if doc.n_sentences() == 0 {
        return Err(Error::EmptyDocument(format!("{}/{}", doc.meeting_id(), doc.member_id())));
    }
    let mask = vec![false; doc.n_sentences()];
    let p = |tape: &mut Tape<'p>, id: usize| tape.param(id, params.get(id));
    let x = tape.constant(doc.content_matrix());
    let (w, b) = (p(tape, ids.input.weight), p(tape, ids.input.bias));
    let h = tape.dense(x, w, b)?;
    let h = tape.relu(h);
    let h = affine_norm(tape, params, h, ids.norm)?;
    let mut h = tape.dropout(h, dropout, train, rng)?;
    for blk in &ids.blocks {
        let vars = AttentionVars {
            query: p(tape, blk.query),
            key: p(tape, blk.key),
            value: p(tape, blk.value),
            output: p(tape, blk.output),
        };
        let (gain, shift) = (p(tape, blk.norm.gain), p(tape, blk.norm.bias));
        h = residual_block(tape, h, vars, gain, shift, ids.heads, &mask)?;
    }
    tape.masked_mean_rows(h, &mask)
}

fn affine_norm<'p>(tape: &mut Tape<'p>, params: &'p ParamSet, x: Var, ids: NormIds) -> Result<Var> {
    let n = tape.layer_norm(x, LN_EPS);
    let g = tape.param(ids.gain, params.get(ids.gain));
    let b = tape.param(ids.bias, params.get(ids.bias));
    let n = tape.mul_row(n, g)?;
    tape.add_row(n, b)
}

/// Records the head on a `1 x d` input and returns the `1 x 1` logit.
pub(crate) fn head<'p, R: Rng + ?Sized>(
    tape: &mut Tape<'p>,
    params: &'p ParamSet,
    ids: HeadIds,
    x: Var,
    dropout: f64,
    train: bool,
    rng: &mut R,
) -> Result<Var> {
    let p = |tape: &mut Tape<'p>, id: usize| tape.param(id, params.get(id));
    let (w1, b1) = (p(tape, ids.hidden.weight), p(tape, ids.hidden.bias));
    let h = tape.dense(x, w1, b1)?;
    let h = tape.relu(h);
    let h = tape.dropout(h, dropout, train, rng)?;
    let (w2, b2) = (p(tape, ids.out.weight), p(tape, ids.out.bias));
    tape.dense(h, w2, b2)
}
