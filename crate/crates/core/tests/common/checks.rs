//! Measurements shared by the topic tests and the acceptance run. Each
//! returns the quantity its criterion bounds.

use std::sync::Arc;

use hidden_dissent::nn::{
    loss_and_grads, ClassifierParams, HyperConfig, MinutesConfig, MinutesExample, MinutesParams, Model, ModelDims,
    VoteExample,
};
use hidden_dissent::tensor::{residual_block, self_attention, AttentionVars, AttentionWeights, Matrix, Tape, Var, LN_EPS};
use hidden_dissent::train::{train_model, TrainConfig};
use rand::Rng;

use super::{central_difference, naive_attention, random_doc, rel_err, rng, uniform_matrix};

type Graph = fn(&mut Tape<'_>, Var) -> Var;

/// Every differentiable op, each composed with a fixed random projection so
/// the scalar loss depends on every output entry differently.
pub fn op_graphs() -> Vec<(&'static str, Graph)> {
    vec![
        ("relu", |t, x| t.relu(x)),
        ("sigmoid", |t, x| t.sigmoid(x)),
        ("layer_norm", |t, x| t.layer_norm(x, LN_EPS)),
        ("scale", |t, x| t.scale(x, -1.7)),
        ("softmax", |t, x| t.masked_softmax(x, &[false, true, false, false, false]).unwrap()),
        ("zero_rows", |t, x| t.zero_rows(x, &[false, true, false, true]).unwrap()),
        ("cols", |t, x| t.cols(x, 1, 3).unwrap()),
        ("concat", |t, x| {
            let a = t.cols(x, 0, 2).unwrap();
            let b = t.sigmoid(x);
            t.concat_cols(&[b, a]).unwrap()
        }),
        ("mean_rows", |t, x| t.masked_mean_rows(x, &[false, true, false, false]).unwrap()),
        ("matmul_nt", |t, x| t.matmul_nt(x, x).unwrap()),
        ("add_sub", |t, x| {
            let s = t.sigmoid(x);
            let a = t.add(x, s).unwrap();
            t.sub(a, x).unwrap()
        }),
        ("row_ops", |t, x| {
            let r = t.cols(x, 0, 5).unwrap();
            let row = t.masked_mean_rows(r, &[false, false, true, false]).unwrap();
            let m = t.mul_row(x, row).unwrap();
            t.add_row(m, row).unwrap()
        }),
        ("bce", |t, x| {
            let z = t.cols(x, 0, 1).unwrap();
            let z = t.masked_mean_rows(z, &[false; 4]).unwrap();
            t.bce_with_logits(z, 1.0).unwrap()
        }),
        ("abs_error", |t, x| {
            let s = t.sum(x);
            t.abs_error(s, 40.0).unwrap()
        }),
        ("dropout", |t, x| {
            // a fixed mask; the gradient is the mask over the keep rate
            let mut r = rng(3);
            t.dropout(x, 0.4, true, &mut r).unwrap()
        }),
    ]
}

/// Worst relative error of reverse-mode gradients against central
/// differences over every op and every input entry.
pub fn op_gradient_worst(seed: u64) -> (f64, &'static str) {
    let mut worst = (0.0, "");
    for (name, op) in op_graphs() {
        let mut r = rng(100 + seed);
        let mut x = uniform_matrix(4, 5, &mut r);
        let probe_seed = r.random::<u64>();
        let eval = |x: &Matrix, want_grad: bool| -> (f64, Option<Matrix>) {
            let mut t = Tape::new();
            let xv = t.leaf(x.clone());
            let y = op(&mut t, xv);
            let (rows, cols) = t.value(y).shape();
            let mut pr = rng(probe_seed);
            let probe = t.constant(uniform_matrix(cols, 1, &mut pr));
            let z = t.matmul(y, probe).unwrap();
            let z = t.sigmoid(z);
            let weights = t.constant(uniform_matrix(1, rows, &mut pr));
            let out = t.matmul(weights, z).unwrap();
            let loss = t.scalar(out);
            let grad = want_grad.then(|| t.backward(out).get(xv).cloned().unwrap_or_else(|| Matrix::zeros(4, 5)));
            (loss, grad)
        };
        let g = eval(&x, true).1.unwrap();
        for i in 0..4 {
            for j in 0..5 {
                let fd = central_difference(&mut x, i, j, 1e-6, |x| eval(x, false).0);
                let e = rel_err(fd, g[(i, j)], 1e-6);
                if e > worst.0 {
                    worst = (e, name);
                }
            }
        }
    }
    worst
}

/// Two stacked residual attention blocks under a squared-error loss;
/// worst relative gradient error over three entries of every weight.
pub fn stacked_blocks_gradient_worst(seed: u64) -> f64 {
    let mut r = rng(12 + seed);
    let d = 16;
    let mut ws: Vec<Matrix> = (0..12)
        .map(|k| match k % 6 {
            4 => Matrix::from_element(1, d, 1.0) + uniform_matrix(1, d, &mut r) * 0.1,
            5 => uniform_matrix(1, d, &mut r) * 0.1,
            _ => uniform_matrix(d, d, &mut r) * 0.5,
        })
        .collect();
    let x = uniform_matrix(5, d, &mut r);
    let mask = [false, false, false, false, true];
    let target = uniform_matrix(5, d, &mut r);
    let forward = |ws: &[Matrix], grads: bool| -> (f64, Vec<Matrix>) {
        let mut t = Tape::new();
        let vars: Vec<_> = ws.iter().enumerate().map(|(i, w)| t.param(i, w)).collect();
        let mut h = t.constant(x.clone());
        for b in 0..2 {
            let v = &vars[b * 6..b * 6 + 6];
            let a = AttentionVars { query: v[0], key: v[1], value: v[2], output: v[3] };
            h = residual_block(&mut t, h, a, v[4], v[5], 4, &mask).unwrap();
        }
        let tgt = t.constant(target.clone());
        let diff = t.sub(h, tgt).unwrap();
        let sq = t.matmul_nt(diff, diff).unwrap();
        let l = t.sum(sq);
        let loss = t.scalar(l);
        let gs = if grads {
            let g = t.backward(l);
            vars.iter().map(|v| g.get(*v).unwrap().clone()).collect()
        } else {
            Vec::new()
        };
        (loss, gs)
    };
    let (_, g) = forward(&ws, true);
    let mut worst: f64 = 0.0;
    for (k, gk) in g.iter().enumerate() {
        for (i, j) in [(0, 0), (gk.nrows() - 1, gk.ncols() - 1), (0, gk.ncols() / 2)] {
            let orig = ws[k][(i, j)];
            ws[k][(i, j)] = orig + 1e-6;
            let up = forward(&ws, false).0;
            ws[k][(i, j)] = orig - 1e-6;
            let down = forward(&ws, false).0;
            ws[k][(i, j)] = orig;
            let fd = (up - down) / 2e-6;
            worst = worst.max(rel_err(fd, gk[(i, j)], 1e-6));
        }
    }
    worst
}

/// Central differences of the loss against reverse-mode gradients on
/// `samples` randomly chosen scalar parameters.
pub fn model_gradient_worst<M: Model>(model: &M, ex: &M::Example, samples: usize, seed: u64) -> f64 {
    let (_, _, grads) = loss_and_grads(model, ex, false, &mut rng(0)).unwrap();
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let id = r.random_range(0..model.params().len());
        let shape = model.params().get(id).shape();
        let (i, j) = (r.random_range(0..shape.0), r.random_range(0..shape.1));
        let mut probe = model.clone();
        let mut m = probe.params().get(id).clone();
        let fd = central_difference(&mut m, i, j, 1e-6, |m| {
            probe.params_mut().get_mut(id).copy_from(m);
            loss_and_grads(&probe, ex, false, &mut rng(0)).unwrap().0
        });
        worst = worst.max(rel_err(grads[id][(i, j)], fd, 1e-6));
    }
    worst
}

/// The full chair/member classifier graph.
pub fn classifier_gradient_worst(seed: u64) -> f64 {
    let mut r = rng(100 + seed);
    let hyper = HyperConfig { n_mhsa_chair: 2, n_mhsa_member: 2, heads_chair: 4, heads_member: 4, dropout: 0.5, lr0: 1e-4 };
    let model = ClassifierParams::init(ModelDims::with_model_dim(24), hyper, seed).unwrap();
    let ex = VoteExample {
        id: 0,
        chair: Arc::new(random_doc("m", "c", 3, &mut r)),
        member: Arc::new(random_doc("m", "x", 4, &mut r)),
        label: (seed % 2) as u8,
    };
    model_gradient_worst(&model, &ex, 32, seed)
}

/// The full minutes regressor graph.
pub fn minutes_gradient_worst(seed: u64) -> f64 {
    let mut r = rng(200 + seed);
    let cfg = MinutesConfig { n_mhsa: 2, ..MinutesConfig::default() };
    let model = MinutesParams::init(ModelDims::with_model_dim(16), cfg, seed).unwrap();
    let ex = MinutesExample { id: 0, doc: Arc::new(random_doc("m", "min", 5, &mut r)), target: 0.3 };
    model_gradient_worst(&model, &ex, 32, seed)
}

/// Largest entry-wise gap between the attention layer and the naive loop
/// over `cases` random widths, head counts, lengths and masks.
pub fn attention_oracle_worst(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let heads = [1, 2, 4, 8][r.random_range(0..4)];
        let d = heads * r.random_range(1..=6);
        let n = r.random_range(1..=9);
        let mut mask: Vec<bool> = (0..n).map(|_| r.random_bool(0.3)).collect();
        let keep = r.random_range(0..n);
        mask[keep] = false;
        let w = AttentionWeights::random(d, heads, &mut r).unwrap();
        let x = uniform_matrix(n, d, &mut r) * r.random_range(0.1..3.0);
        let fast = self_attention(&x, &w, &mask).unwrap();
        let slow = naive_attention(&x, &w.query, &w.key, &w.value, &w.output, heads, &mask);
        worst = worst.max((fast - slow).abs().max());
    }
    worst
}

/// Eight documents with targets 0.1..0.8; returns the MAE after at most
/// 2,000 steps and the number of steps taken.
pub fn overfit_minutes() -> (f64, usize) {
    let mut r = rng(10);
    let docs: Vec<MinutesExample> = (0..8)
        .map(|i| MinutesExample {
            id: i,
            doc: Arc::new(random_doc("m", &format!("min{i}"), 3 + i % 3, &mut r)),
            target: 0.1 * (i + 1) as f64,
        })
        .collect();
    let cfg = MinutesConfig { n_mhsa: 2, heads: 4, dropout: 0.0, lr0: 3e-3 };
    let model = MinutesParams::init(ModelDims::with_model_dim(32), cfg, 10).unwrap();
    let tcfg = TrainConfig {
        batch_size: 8,
        max_steps: 2000,
        lr_decay_factor: 0.99,
        patience: 200,
        seed: 10,
        ..TrainConfig::default()
    };
    let out = train_model(model, &docs, &docs, &tcfg, cfg.lr0).unwrap();
    (out.test_metrics.mae, out.steps_run)
}

/// `-sum p log_b p` with base-2 logarithms and an explicit change of base.
pub fn brute_entropy(counts: &[f64], base: usize) -> f64 {
    let total: f64 = counts.iter().sum();
    let mut h = 0.0;
    for &c in counts {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h / (base as f64).log2()
}

/// Slope from the normal equations with x = 1..5, and the two-pass sd.
pub fn brute_trend(y: &[f64; 5]) -> (f64, f64) {
    let n = 5.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let x = (i + 1) as f64;
        sx += x;
        sy += v;
        sxx += x * x;
        sxy += x * v;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, super::sample_sd(y))
}

/// Smallest absolute-deviation sum over every observed value; the
/// objective is piecewise linear and convex, so its minimum sits on one.
pub fn brute_min_abs_dev(x: &[f64]) -> f64 {
    x.iter()
        .map(|&c| x.iter().map(|v| (v - c).abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Largest violation of the Lasso optimality conditions on standardized
/// regressors, together with the mean residual.
pub fn lasso_kkt_residual(x: &nalgebra::DMatrix<f64>, y: &nalgebra::DVector<f64>, fit: &hidden_dissent::econ::LassoFit) -> f64 {
    let n = x.nrows() as f64;
    let resid: nalgebra::DVector<f64> = y - (x * &fit.coef).add_scalar(fit.intercept);
    let mut worst = (resid.sum() / n).abs();
    for j in 0..x.ncols() {
        let col = x.column(j);
        let m = col.mean();
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        let g: f64 = col.iter().zip(resid.iter()).map(|(a, e)| (a - m) / sd * e).sum::<f64>() / n;
        let b = fit.coef[j] * sd;
        let v = if b != 0.0 { (g - fit.lambda * b.signum()).abs() } else { (g.abs() - fit.lambda).max(0.0) };
        worst = worst.max(v);
    }
    worst
}
