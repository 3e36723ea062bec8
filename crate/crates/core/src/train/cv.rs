use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trainer::{train_model, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::Model;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub mae: f64,
    pub r2: f64,
    pub best_step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldMetrics>,
    pub mean_mae: f64,
    pub mean_r2: f64,
}

/// Fold index of every observation: a seeded shuffle dealt round-robin,
/// so fold sizes differ by at most one.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::Folds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::stream(seed, &[]));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

/// k-fold cross-validation. Each fold trains a fresh model from `init` on
/// the other folds; the held-out fold drives early stopping and is scored.
pub fn kfold_cv<M, F>(data: &[M::Example], k: usize, cfg: &TrainConfig, lr0: f64, init: F) -> Result<CvReport>
where
    M: Model,
    M::Example: Clone,
    F: Fn(usize) -> Result<M> + Sync,
{
    let assignment = kfold_partition(data.len(), k, cfg.seed)?;
    let folds: Vec<FoldMetrics> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (ex, &f) in data.iter().zip(&assignment) {
                if f == fold { test.push(ex.clone()) } else { train.push(ex.clone()) }
            }
            let tcfg = TrainConfig { seed: seed::derive(cfg.seed, &[fold as u64 + 1]), ..*cfg };
            let out = train_model(init(fold)?, &train, &test, &tcfg, lr0)?;
            Ok(FoldMetrics {
                fold,
                n_train: train.len(),
                n_test: test.len(),
                mae: out.test_metrics.mae,
                r2: out.test_metrics.r2,
                best_step: out.best_step,
            })
        })
        .collect::<Result<_>>()?;
    let kf = k as f64;
    Ok(CvReport {
        mean_mae: folds.iter().map(|f| f.mae).sum::<f64>() / kf,
        mean_r2: folds.iter().map(|f| f.r2).sum::<f64>() / kf,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leave_one_out_on_five() {
        let f = kfold_partition(5, 5, 3).unwrap();
        let mut sorted = f.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn fold_sizes_balanced() {
        for n in 2..60 {
            for k in 2..=n.min(9) {
                let f = kfold_partition(n, k, n as u64).unwrap();
                let sizes: Vec<usize> = (0..k).map(|j| f.iter().filter(|&&x| x == j).count()).collect();
                assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn too_many_folds() {
        assert!(matches!(kfold_partition(3, 4, 0), Err(Error::Folds { n: 3, k: 4 })));
        assert!(kfold_partition(3, 1, 0).is_err());
    }
}
