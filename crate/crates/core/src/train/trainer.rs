use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::EvalMetrics;
use super::optim::{learning_rate, Adam, LR_DECAY_EVERY};
use crate::error::{Error, Result};
use crate::nn::{evaluate, loss_and_grads, Model};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_steps: usize,
    pub lr_decay_factor: f64,
    /// Evaluations without test-loss improvement before stopping.
    pub patience: usize,
    /// Optimizer steps between test-set evaluations.
    pub eval_every: usize,
    pub split_frac: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_steps: 2_000,
            lr_decay_factor: 0.9,
            patience: 10,
            eval_every: LR_DECAY_EVERY,
            split_frac: 0.8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_steps == 0 || self.eval_every == 0 || self.patience == 0 {
            return Err(Error::Config("batch_size, max_steps, eval_every and patience must be positive".into()));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor < 1.0) {
            return Err(Error::Config(format!("lr_decay_factor {} outside (0, 1)", self.lr_decay_factor)));
        }
        if !(self.split_frac > 0.0 && self.split_frac < 1.0) {
            return Err(Error::Config(format!("split_frac {} outside (0, 1)", self.split_frac)));
        }
        Ok(())
    }
}

/// One evaluation point of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub lr: f64,
    /// Mean training-batch loss since the previous evaluation.
    pub train_loss: f64,
    pub test_loss: f64,
    /// Training-batch accuracy (classifier) or R^2 (regressor) since the previous evaluation.
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Weights at the best test-loss evaluation, rounded to storage precision.
    pub model: M,
    pub trace: Vec<TraceRow>,
    pub best_step: usize,
    pub best_test_loss: f64,
    pub steps_run: usize,
    pub test_metrics: EvalMetrics,
}

/// Loss and metrics of `model` over `data` in evaluation mode.
pub fn evaluate_set<M: Model>(model: &M, data: &[M::Example]) -> Result<EvalMetrics> {
    let results: Vec<(f64, f64)> = data.par_iter().map(|ex| evaluate(model, ex)).collect::<Result<_>>()?;
    let losses: Vec<f64> = results.iter().map(|r| r.0).collect();
    let preds: Vec<f64> = results.iter().map(|r| r.1).collect();
    let targets: Vec<f64> = data.iter().map(M::target).collect();
    Ok(EvalMetrics::compute(&losses, &preds, &targets))
}

fn headline<M: Model>(m: &EvalMetrics) -> f64 {
    match M::TASK {
        crate::nn::Task::Classification => m.accuracy,
        crate::nn::Task::Regression => m.r2,
    }
}

/// Mini-batch Adam with step-decay learning rate and test-loss early stopping.
///
/// Per-example gradients are computed in parallel and summed in example
/// order, so results do not depend on the worker count.
pub fn train_model<M: Model>(
    model: M,
    train: &[M::Example],
    test: &[M::Example],
    cfg: &TrainConfig,
    lr0: f64,
) -> Result<TrainOutcome<M>> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::InsufficientData("training and test sets must be nonempty".into()));
    }
    if !(lr0 >= 0.0 && lr0.is_finite()) {
        return Err(Error::Config(format!("invalid initial learning rate {lr0}")));
    }
    let mut current = model;
    let mut best: Option<(M, f64, usize)> = None;
    let mut adam = Adam::new(current.params());
    let mut order_rng = seed::stream(cfg.seed, &[0]);
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut order_rng);
    let mut cursor = 0;
    let mut trace = Vec::new();
    let mut window_losses = Vec::new();
    let mut window_preds = Vec::new();
    let mut window_targets = Vec::new();
    let mut stale = 0;
    let mut steps_run = 0;

    for step in 0..cfg.max_steps {
        let lr = learning_rate(lr0, cfg.lr_decay_factor, step);
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size.min(train.len()) {
            if cursor == order.len() {
                order.shuffle(&mut order_rng);
                cursor = 0;
            }
            batch.push(order[cursor]);
            cursor += 1;
        }
        let model_ref = &current;
        let results: Vec<_> = batch
            .par_iter()
            .enumerate()
            .map(|(slot, &i)| {
                let mut rng = seed::stream(cfg.seed, &[1, step as u64, slot as u64]);
                loss_and_grads(model_ref, &train[i], true, &mut rng)
            })
            .collect::<Result<_>>()?;
        let mut grads = current.params().zeros_like();
        let mut batch_loss = 0.0;
        for (k, (loss, pred, g)) in results.into_iter().enumerate() {
            batch_loss += loss;
            for (acc, gi) in grads.iter_mut().zip(g) {
                *acc += gi;
            }
            window_losses.push(loss);
            window_preds.push(pred);
            window_targets.push(M::target(&train[batch[k]]));
        }
        let scale = 1.0 / batch.len() as f64;
        batch_loss *= scale;
        if !batch_loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::TrainingDiverged { step, trace });
        }
        grads.iter_mut().for_each(|g| *g *= scale);
        adam.step(current.params_mut(), &grads, lr);
        steps_run = step + 1;

        if steps_run % cfg.eval_every == 0 || steps_run == cfg.max_steps {
            let test_m = evaluate_set(&current, test)?;
            if !test_m.loss.is_finite() {
                return Err(Error::TrainingDiverged { step, trace });
            }
            let train_m = EvalMetrics::compute(&window_losses, &window_preds, &window_targets);
            window_losses.clear();
            window_preds.clear();
            window_targets.clear();
            trace.push(TraceRow {
                step: steps_run,
                lr,
                train_loss: train_m.loss,
                test_loss: test_m.loss,
                train_acc: headline::<M>(&train_m),
                test_acc: headline::<M>(&test_m),
            });
            if best.as_ref().is_none_or(|(_, l, _)| test_m.loss < *l) {
                best = Some((current.clone(), test_m.loss, steps_run));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }
    let (mut model, best_test_loss, best_step) = best.expect("at least one evaluation runs");
    model.params_mut().round_to_storage();
    let test_metrics = evaluate_set(&model, test)?;
    Ok(TrainOutcome {
        model,
        trace,
        best_step,
        best_test_loss,
        steps_run,
        test_metrics,
    })
}

/// Writes the trace as CSV with header `step,lr,train_loss,test_loss,train_acc,test_acc`.
pub fn write_trace_csv<W: std::io::Write>(w: W, trace: &[TraceRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in trace {
        wtr.serialize(row).map_err(|e| Error::Data(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Data(e.to_string()))
}
