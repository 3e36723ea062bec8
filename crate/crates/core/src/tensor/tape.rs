//! Reverse-mode automatic differentiation over dense row-major-semantics
//! matrices.
//!
//! A [`Tape`] records every operation as a node holding its forward value.
//! [`Tape::backward`] walks the nodes in reverse and accumulates exact
//! gradients for every node that depends on a leaf or parameter.

use std::borrow::Cow;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    LayerNorm { x: Var, inv_std: Vec<f64> },
    Dropout { x: Var, keep_scale: Matrix },
    MaskedSoftmax(Var),
    ZeroRows { x: Var, mask: Vec<bool> },
    Cols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    MaskedMeanRows { x: Var, mask: Vec<bool>, count: usize },
    Sum(Var),
    BceWithLogits { logit: Var, target: f64 },
    AbsError { pred: Var, target: f64 },
}

struct Node<'p> {
    value: Cow<'p, Matrix>,
    op: Op,
    needs_grad: bool,
    param: Option<usize>,
}

/// Records a computation for reverse-mode differentiation.
///
/// Parameters are borrowed for the tape's lifetime, so building a graph never
/// copies weight matrices.
#[derive(Default)]
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
}

fn dims(m: &Matrix) -> (usize, usize) {
    (m.nrows(), m.ncols())
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, parents: &[Var]) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
            needs_grad,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// A value that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op: Op::Leaf,
            needs_grad: false,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// An owned input that receives a gradient.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op: Op::Leaf,
            needs_grad: true,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// A borrowed parameter identified by `id` in its owning store.
    pub fn param(&mut self, id: usize, value: &'p Matrix) -> Var {
        self.nodes.push(Node {
            value: Cow::Borrowed(value),
            op: Op::Leaf,
            needs_grad: true,
            param: Some(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// The single entry of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(dims(m), (1, 1));
        m[(0, 0)]
    }

    fn check(&self, cond: bool, what: impl FnOnce() -> String) -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(Error::Dimension(what()))
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, mb) = (self.value(a), self.value(b));
        self.check(ma.ncols() == mb.nrows(), || {
            format!("matmul {:?} x {:?}", dims(ma), dims(mb))
        })?;
        let v = ma * mb;
        Ok(self.push(v, Op::MatMul(a, b), &[a, b]))
    }

    /// `a * b^T`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, mb) = (self.value(a), self.value(b));
        self.check(ma.ncols() == mb.ncols(), || {
            format!("matmul_nt {:?} x {:?}^T", dims(ma), dims(mb))
        })?;
        let v = ma * mb.transpose();
        Ok(self.push(v, Op::MatMulNt(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, mb) = (self.value(a), self.value(b));
        self.check(dims(ma) == dims(mb), || format!("add {:?} + {:?}", dims(ma), dims(mb)))?;
        let v = ma + mb;
        Ok(self.push(v, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, mb) = (self.value(a), self.value(b));
        self.check(dims(ma) == dims(mb), || format!("sub {:?} - {:?}", dims(ma), dims(mb)))?;
        let v = ma - mb;
        Ok(self.push(v, Op::Sub(a, b), &[a, b]))
    }

    /// Adds a `1 x m` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (ma, mr) = (self.value(a), self.value(row));
        self.check(mr.nrows() == 1 && mr.ncols() == ma.ncols(), || {
            format!("add_row {:?} + {:?}", dims(ma), dims(mr))
        })?;
        let mut v = ma.clone();
        for mut r in v.row_iter_mut() {
            r += mr.row(0);
        }
        Ok(self.push(v, Op::AddRow(a, row), &[a, row]))
    }

    /// Multiplies every row of `a` elementwise by a `1 x m` row.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (ma, mr) = (self.value(a), self.value(row));
        self.check(mr.nrows() == 1 && mr.ncols() == ma.ncols(), || {
            format!("mul_row {:?} * {:?}", dims(ma), dims(mr))
        })?;
        let mut v = ma.clone();
        for mut r in v.row_iter_mut() {
            r.component_mul_assign(&mr.row(0));
        }
        Ok(self.push(v, Op::MulRow(a, row), &[a, row]))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a) * s;
        self.push(v, Op::Scale(a, s), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a), &[a])
    }

    /// `x W + b` with `W: in x out` and `b: 1 x out`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    /// Per-row standardization over columns, before any affine transform.
    /// A constant row maps to zeros.
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Var {
        let m = self.value(a);
        let (rows, cols) = dims(m);
        let mut out = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        for i in 0..rows {
            let row = m.row(i);
            let first = row[0];
            let mean = if row.iter().all(|&v| v == first) {
                first
            } else {
                row.iter().sum::<f64>() / cols as f64
            };
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / cols as f64;
            let is = 1.0 / (var + eps).sqrt();
            for j in 0..cols {
                out[(i, j)] = (m[(i, j)] - mean) * is;
            }
            inv_std.push(is);
        }
        self.push(out, Op::LayerNorm { x: a, inv_std }, &[a])
    }

    /// Inverted dropout: zeroes each entry with probability `rate` and scales
    /// survivors by `1 / (1 - rate)`. Identity when `train` is false.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, rate: f64, train: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !train || rate == 0.0 {
            return Ok(a);
        }
        let m = self.value(a);
        let keep = 1.0 / (1.0 - rate);
        let keep_scale = Matrix::from_fn(m.nrows(), m.ncols(), |_, _| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        });
        let v = m.component_mul(&keep_scale);
        Ok(self.push(v, Op::Dropout { x: a, keep_scale }, &[a]))
    }

    /// Row-wise softmax over the columns whose `key_mask` entry is false;
    /// masked columns get weight zero.
    pub fn masked_softmax(&mut self, a: Var, key_mask: &[bool]) -> Result<Var> {
        let m = self.value(a);
        self.check(key_mask.len() == m.ncols(), || {
            format!("mask length {} for {} columns", key_mask.len(), m.ncols())
        })?;
        if key_mask.iter().all(|&k| k) {
            return Err(Error::EmptyAttention);
        }
        let mut out = Matrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            let max = (0..m.ncols())
                .filter(|&j| !key_mask[j])
                .map(|j| m[(i, j)])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for j in (0..m.ncols()).filter(|&j| !key_mask[j]) {
                let e = (m[(i, j)] - max).exp();
                out[(i, j)] = e;
                total += e;
            }
            for j in 0..m.ncols() {
                out[(i, j)] /= total;
            }
        }
        Ok(self.push(out, Op::MaskedSoftmax(a), &[a]))
    }

    /// Zeroes the rows whose `mask` entry is true.
    pub fn zero_rows(&mut self, a: Var, mask: &[bool]) -> Result<Var> {
        let m = self.value(a);
        self.check(mask.len() == m.nrows(), || {
            format!("mask length {} for {} rows", mask.len(), m.nrows())
        })?;
        let mut v = m.clone();
        for (i, _) in mask.iter().enumerate().filter(|(_, &k)| k) {
            v.row_mut(i).fill(0.0);
        }
        Ok(self.push(v, Op::ZeroRows { x: a, mask: mask.to_vec() }, &[a]))
    }

    /// Columns `start .. start + width`.
    pub fn cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let m = self.value(a);
        self.check(start + width <= m.ncols(), || {
            format!("column slice {start}..{} of {}", start + width, m.ncols())
        })?;
        let v = m.columns(start, width).into_owned();
        Ok(self.push(v, Op::Cols { x: a, start }, &[a]))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).nrows();
        self.check(parts.iter().all(|p| self.value(*p).nrows() == rows), || {
            "concat_cols with unequal row counts".into()
        })?;
        let width: usize = parts.iter().map(|p| self.value(*p).ncols()).sum();
        let mut v = Matrix::zeros(rows, width);
        let mut at = 0;
        for p in parts {
            let m = self.value(*p);
            v.columns_mut(at, m.ncols()).copy_from(m);
            at += m.ncols();
        }
        Ok(self.push(v, Op::ConcatCols(parts.to_vec()), parts))
    }

    /// Mean of the rows whose `mask` entry is false, as a `1 x m` row.
    pub fn masked_mean_rows(&mut self, a: Var, mask: &[bool]) -> Result<Var> {
        let m = self.value(a);
        self.check(mask.len() == m.nrows(), || {
            format!("mask length {} for {} rows", mask.len(), m.nrows())
        })?;
        let count = mask.iter().filter(|&&k| !k).count();
        if count == 0 {
            return Err(Error::EmptyDocument("every row is masked".into()));
        }
        let mut v = Matrix::zeros(1, m.ncols());
        for i in (0..m.nrows()).filter(|&i| !mask[i]) {
            v += m.row(i);
        }
        v /= count as f64;
        Ok(self.push(v, Op::MaskedMeanRows { x: a, mask: mask.to_vec(), count }, &[a]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Matrix::from_element(1, 1, self.value(a).sum());
        self.push(v, Op::Sum(a), &[a])
    }

    /// Binary cross-entropy of `sigmoid(logit)` against `target`, computed
    /// from the logit for stability.
    pub fn bce_with_logits(&mut self, logit: Var, target: f64) -> Result<Var> {
        let m = self.value(logit);
        self.check(dims(m) == (1, 1), || format!("bce on {:?}", dims(m)))?;
        let z = m[(0, 0)];
        let loss = z.max(0.0) - z * target + (-z.abs()).exp().ln_1p();
        Ok(self.push(Matrix::from_element(1, 1, loss), Op::BceWithLogits { logit, target }, &[logit]))
    }

    /// `|pred - target|` for a `1 x 1` prediction.
    pub fn abs_error(&mut self, pred: Var, target: f64) -> Result<Var> {
        let m = self.value(pred);
        self.check(dims(m) == (1, 1), || format!("abs_error on {:?}", dims(m)))?;
        let loss = (m[(0, 0)] - target).abs();
        Ok(self.push(Matrix::from_element(1, 1, loss), Op::AbsError { pred, target }, &[pred]))
    }

    /// Gradients of the scalar node `out` with respect to every node.
    pub fn backward(&self, out: Var) -> Gradients {
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        let (r, c) = dims(self.value(out));
        grads[out.0] = Some(Matrix::from_element(r, c, 1.0));

        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let y = node.value.as_ref();
            let mut send = |v: Var, d: Matrix| {
                if self.nodes[v.0].needs_grad {
                    match &mut grads[v.0] {
                        Some(acc) => *acc += d,
                        slot @ None => *slot = Some(d),
                    }
                }
            };
            match &node.op {
                Op::Leaf => unreachable!("leaves keep their gradient"),
                Op::MatMul(a, b) => {
                    if self.nodes[a.0].needs_grad {
                        send(*a, &g * self.value(*b).transpose());
                    }
                    if self.nodes[b.0].needs_grad {
                        send(*b, self.value(*a).tr_mul(&g));
                    }
                }
                Op::MatMulNt(a, b) => {
                    if self.nodes[a.0].needs_grad {
                        send(*a, &g * self.value(*b));
                    }
                    if self.nodes[b.0].needs_grad {
                        send(*b, g.tr_mul(self.value(*a)));
                    }
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Sub(a, b) => {
                    send(*a, g.clone());
                    send(*b, -g);
                }
                Op::AddRow(a, row) => {
                    send(*row, row_sums(&g));
                    send(*a, g);
                }
                Op::MulRow(a, row) => {
                    let mr = self.value(*row);
                    let ma = self.value(*a);
                    send(*row, row_sums(&g.component_mul(ma)));
                    let mut da = g;
                    for mut r in da.row_iter_mut() {
                        r.component_mul_assign(&mr.row(0));
                    }
                    send(*a, da);
                }
                Op::Scale(a, s) => send(*a, g * *s),
                Op::Relu(a) => {
                    let x = self.value(*a);
                    send(*a, g.zip_map(x, |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
                }
                Op::Sigmoid(a) => send(*a, g.zip_map(y, |gv, yv| gv * yv * (1.0 - yv))),
                Op::LayerNorm { x, inv_std } => {
                    let cols = y.ncols() as f64;
                    let mut dx = Matrix::zeros(y.nrows(), y.ncols());
                    for i in 0..y.nrows() {
                        let mean_g = g.row(i).sum() / cols;
                        let mean_gy = g.row(i).dot(&y.row(i)) / cols;
                        for j in 0..y.ncols() {
                            dx[(i, j)] = inv_std[i] * (g[(i, j)] - mean_g - y[(i, j)] * mean_gy);
                        }
                    }
                    send(*x, dx);
                }
                Op::Dropout { x, keep_scale } => send(*x, g.component_mul(keep_scale)),
                Op::MaskedSoftmax(a) => {
                    let mut dx = Matrix::zeros(y.nrows(), y.ncols());
                    for i in 0..y.nrows() {
                        let dot = g.row(i).dot(&y.row(i));
                        for j in 0..y.ncols() {
                            dx[(i, j)] = y[(i, j)] * (g[(i, j)] - dot);
                        }
                    }
                    send(*a, dx);
                }
                Op::ZeroRows { x, mask } => {
                    let mut dx = g;
                    for (i, _) in mask.iter().enumerate().filter(|(_, &k)| k) {
                        dx.row_mut(i).fill(0.0);
                    }
                    send(*x, dx);
                }
                Op::Cols { x, start } => {
                    let src = self.value(*x);
                    let mut dx = Matrix::zeros(src.nrows(), src.ncols());
                    dx.columns_mut(*start, g.ncols()).copy_from(&g);
                    send(*x, dx);
                }
                Op::ConcatCols(parts) => {
                    let mut at = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        send(*p, g.columns(at, w).into_owned());
                        at += w;
                    }
                }
                Op::MaskedMeanRows { x, mask, count } => {
                    let src = self.value(*x);
                    let mut dx = Matrix::zeros(src.nrows(), src.ncols());
                    let share = &g / *count as f64;
                    for i in (0..src.nrows()).filter(|&i| !mask[i]) {
                        dx.row_mut(i).copy_from(&share);
                    }
                    send(*x, dx);
                }
                Op::Sum(a) => {
                    let src = self.value(*a);
                    send(*a, Matrix::from_element(src.nrows(), src.ncols(), g[(0, 0)]));
                }
                Op::BceWithLogits { logit, target } => {
                    let z = self.value(*logit)[(0, 0)];
                    send(*logit, Matrix::from_element(1, 1, g[(0, 0)] * (sigmoid(z) - target)));
                }
                Op::AbsError { pred, target } => {
                    let d = self.value(*pred)[(0, 0)] - target;
                    let sign = if d > 0.0 {
                        1.0
                    } else if d < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    send(*pred, Matrix::from_element(1, 1, g[(0, 0)] * sign));
                }
            }
        }
        Gradients { grads }
    }

    /// Gradients of parameter nodes as `(param id, gradient)` pairs in tape order.
    pub fn param_grads(&self, grads: &Gradients) -> Vec<(usize, Matrix)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| {
                let id = n.param?;
                grads.grads[i].clone().map(|g| (id, g))
            })
            .collect()
    }
}

fn row_sums(g: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, g.ncols());
    for r in g.row_iter() {
        out += r;
    }
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}
