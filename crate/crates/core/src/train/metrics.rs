use serde::{Deserialize, Serialize};

/// Summary of predictions against targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n: usize,
    pub loss: f64,
    /// Share of rounded predictions equal to the target.
    pub accuracy: f64,
    /// Mean of per-class recall over the classes present.
    pub balanced_accuracy: f64,
    pub mae: f64,
    pub r2: f64,
}

impl EvalMetrics {
    pub fn compute(losses: &[f64], preds: &[f64], targets: &[f64]) -> Self {
        let n = preds.len();
        if n == 0 {
            return Self { n, loss: f64::NAN, accuracy: f64::NAN, balanced_accuracy: f64::NAN, mae: f64::NAN, r2: 0.0 };
        }
        let nf = n as f64;
        let loss = losses.iter().sum::<f64>() / nf;
        let hits = preds
            .iter()
            .zip(targets)
            .filter(|(p, t)| f64::from(crate::nn::predict_vote(**p)) == t.round())
            .count();
        let mut recall = Vec::new();
        for class in [0.0, 1.0] {
            let idx: Vec<usize> = (0..n).filter(|&i| targets[i].round() == class).collect();
            if !idx.is_empty() {
                let ok = idx.iter().filter(|&&i| f64::from(crate::nn::predict_vote(preds[i])) == class).count();
                recall.push(ok as f64 / idx.len() as f64);
            }
        }
        let mae = preds.iter().zip(targets).map(|(p, t)| (p - t).abs()).sum::<f64>() / nf;
        Self {
            n,
            loss,
            accuracy: hits as f64 / nf,
            balanced_accuracy: recall.iter().sum::<f64>() / recall.len() as f64,
            mae,
            r2: r_squared(preds, targets),
        }
    }
}

/// `1 - SS_res / SS_tot`; 0 when the targets have no variance.
pub fn r_squared(preds: &[f64], targets: &[f64]) -> f64 {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return 0.0;
    }
    let ss_res: f64 = preds.iter().zip(targets).map(|(p, t)| (t - p).powi(2)).sum();
    1.0 - ss_res / ss_tot
}
