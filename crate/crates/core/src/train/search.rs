use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::BalancedSplit;
use super::trainer::{evaluate_set, train_model, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::{ClassifierParams, HyperConfig, ModelDims, VoteExample, DROPOUT_RANGE, DROPOUT_STEP, HEAD_CHOICES, LR_RANGE, MODULES_RANGE};
use crate::seed;

/// Draws one configuration: module counts uniform on their integer grid,
/// heads uniform on the allowed set, dropout uniform on its grid, and the
/// learning rate log-uniform.
pub fn sample_hyper<R: Rng + ?Sized>(rng: &mut R) -> HyperConfig {
    let steps = ((DROPOUT_RANGE.1 - DROPOUT_RANGE.0) / DROPOUT_STEP).round() as usize;
    let k = rng.random_range(0..=steps);
    let dropout = ((DROPOUT_RANGE.0 + k as f64 * DROPOUT_STEP) * 1000.0).round() / 1000.0;
    let (lo, hi) = (LR_RANGE.0.ln(), LR_RANGE.1.ln());
    HyperConfig {
        n_mhsa_chair: rng.random_range(MODULES_RANGE.0..=MODULES_RANGE.1),
        n_mhsa_member: rng.random_range(MODULES_RANGE.0..=MODULES_RANGE.1),
        heads_chair: HEAD_CHOICES[rng.random_range(0..HEAD_CHOICES.len())],
        heads_member: HEAD_CHOICES[rng.random_range(0..HEAD_CHOICES.len())],
        dropout,
        lr0: rng.random_range(lo..=hi).exp().clamp(LR_RANGE.0, LR_RANGE.1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrial {
    pub trial: usize,
    pub seed: u64,
    pub hyper: HyperConfig,
    /// Batch accuracy over the evaluation window that produced the best checkpoint.
    pub train_accuracy: f64,
    /// Accuracy of the best checkpoint on the balanced test split.
    pub test_accuracy: f64,
    /// Accuracy of the best checkpoint on the test split before oversampling.
    pub test_accuracy_original: f64,
    pub best_test_loss: f64,
    pub best_step: usize,
    pub steps_run: usize,
}

/// Seeded random search. Trials run in parallel, each with its own seed
/// stream; the result is sorted by best test loss (ties by trial index)
/// together with the best trial's weights.
pub fn hyper_search(
    split: &BalancedSplit<VoteExample>,
    dims: ModelDims,
    cfg: &TrainConfig,
    budget: usize,
    master_seed: u64,
) -> Result<(Vec<SearchTrial>, ClassifierParams)> {
    if budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    let runs: Vec<(SearchTrial, ClassifierParams)> = (0..budget)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = seed::derive(master_seed, &[trial as u64]);
            let mut rng = seed::stream(trial_seed, &[0]);
            let hyper = sample_hyper(&mut rng);
            let model = ClassifierParams::init(dims, hyper, seed::derive(trial_seed, &[1]))?;
            let tcfg = TrainConfig { seed: seed::derive(trial_seed, &[2]), ..*cfg };
            let out = train_model(model, &split.train, &split.test, &tcfg, hyper.lr0)?;
            let original = evaluate_set(&out.model, &split.test_original)?;
            let train_accuracy = out
                .trace
                .iter()
                .find(|r| r.step == out.best_step)
                .map_or(f64::NAN, |r| r.train_acc);
            let record = SearchTrial {
                trial,
                seed: trial_seed,
                hyper,
                train_accuracy,
                test_accuracy: out.test_metrics.accuracy,
                test_accuracy_original: original.accuracy,
                best_test_loss: out.best_test_loss,
                best_step: out.best_step,
                steps_run: out.steps_run,
            };
            Ok((record, out.model))
        })
        .collect::<Result<_>>()?;
    let mut runs = runs;
    runs.sort_by(|a, b| a.0.best_test_loss.total_cmp(&b.0.best_test_loss).then(a.0.trial.cmp(&b.0.trial)));
    let mut trials = Vec::with_capacity(runs.len());
    let mut best = None;
    for (t, m) in runs {
        if best.is_none() {
            best = Some(m);
        }
        trials.push(t);
    }
    Ok((trials, best.expect("budget >= 1")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_stay_inside_the_space() {
        let mut rng = seed::stream(5, &[]);
        let mut seen_heads = std::collections::BTreeSet::new();
        for _ in 0..1000 {
            let h = sample_hyper(&mut rng);
            h.validate().unwrap();
            seen_heads.insert(h.heads_chair);
        }
        assert_eq!(seen_heads.len(), 3);
    }
}
