use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::lasso::lasso;
use crate::error::{Error, Result};
use crate::train::kfold_partition;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmlResult {
    pub theta: f64,
    /// Heteroskedasticity-robust (HC1) standard error.
    pub se: f64,
    pub n: usize,
    pub folds: usize,
    pub lambda: f64,
    #[serde(skip)]
    pub y_resid: DVector<f64>,
    #[serde(skip)]
    pub t_resid: DVector<f64>,
}

/// Partialling-out estimate of the effect of `t` on `y` given confounders
/// `x`: both are predicted from `x` by Lasso with cross-fitting over
/// `folds` seeded folds, and the out-of-fold residuals are regressed on
/// each other without an intercept.
pub fn dml_effect(y: &[f64], t: &[f64], x: &DMatrix<f64>, folds: usize, lambda: f64, seed: u64) -> Result<DmlResult> {
    let n = y.len();
    if t.len() != n || x.nrows() != n {
        return Err(Error::Dimension(format!("y has {n} rows, T {}, X {}", t.len(), x.nrows())));
    }
    let assignment = kfold_partition(n, folds, seed)?;
    dml_with_folds(y, t, x, &assignment, lambda)
}

/// As [`dml_effect`] with an explicit fold index per row.
pub fn dml_with_folds(y: &[f64], t: &[f64], x: &DMatrix<f64>, assignment: &[usize], lambda: f64) -> Result<DmlResult> {
    let n = y.len();
    if t.len() != n || x.nrows() != n || assignment.len() != n {
        return Err(Error::Dimension(format!("y has {n} rows, T {}, X {}, folds {}", t.len(), x.nrows(), assignment.len())));
    }
    let folds = assignment.iter().max().map_or(0, |m| m + 1);
    if folds < 2 {
        return Err(Error::Folds { n, k: folds });
    }
    let (yv, tv) = (DVector::from_column_slice(y), DVector::from_column_slice(t));
    let mut y_hat = DVector::zeros(n);
    let mut t_hat = DVector::zeros(n);
    for k in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != k).collect();
        let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
        let xt = x.select_rows(&train);
        let xs = x.select_rows(&test);
        let fy = lasso(&xt, &DVector::from_iterator(train.len(), train.iter().map(|&i| yv[i])), lambda)?;
        let ft = lasso(&xt, &DVector::from_iterator(train.len(), train.iter().map(|&i| tv[i])), lambda)?;
        let (py, pt) = (fy.predict(&xs), ft.predict(&xs));
        for (pos, &i) in test.iter().enumerate() {
            y_hat[i] = py[pos];
            t_hat[i] = pt[pos];
        }
    }
    let u = &yv - &y_hat;
    let v = &tv - &t_hat;
    let vv = v.norm_squared();
    if vv <= 1e-24 * tv.norm_squared().max(1.0) {
        return Err(Error::Unidentified("treatment residuals have no variance".into()));
    }
    let theta = v.dot(&u) / vv;
    let e = &u - &v * theta;
    let meat: f64 = v.iter().zip(e.iter()).map(|(a, b)| (a * b).powi(2)).sum();
    let se = (meat * n as f64 / (n as f64 - 1.0)).sqrt() / vv;
    Ok(DmlResult { theta, se, n, folds, lambda, y_resid: u, t_resid: v })
}

impl DmlResult {
    /// The second-stage slope as a one-row fit named `name`, for tables.
    pub fn as_fit(&self, name: &str) -> super::FitResult {
        super::FitResult {
            model: "dml".into(),
            names: vec![name.to_string()],
            coef: DVector::from_element(1, self.theta),
            cov: nalgebra::DMatrix::from_element(1, 1, self.se * self.se),
            se: DVector::from_element(1, self.se),
            se_kind: super::SeKind::Robust,
            log_likelihood: f64::NAN,
            n: self.n,
            n_clusters: None,
            observed: self.y_resid.clone(),
            fitted: &self.t_resid * self.theta,
            r2: None,
            adj_r2: None,
            aux: [("folds".to_string(), self.folds as f64), ("lambda".to_string(), self.lambda)].into_iter().collect(),
            iterations: 0,
            notes: Vec::new(),
        }
    }
}
