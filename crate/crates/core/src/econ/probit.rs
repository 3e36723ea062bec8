use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::linalg::{check_rank, diag_sqrt, sandwich, spd_inverse};
use super::optim::{bfgs, numeric_hessian, BfgsOptions};
use super::special::{ln_normal_cdf, mills, normal_cdf};
use super::{Design, FitResult, SeKind};
use crate::error::{Error, Result};

/// Log-likelihood of a binary outcome under the probit link and its
/// derivative with respect to the linear predictor.
pub(crate) fn probit_terms(y: f64, eta: f64) -> (f64, f64) {
    if y > 0.5 {
        (ln_normal_cdf(eta), mills(eta))
    } else {
        (ln_normal_cdf(-eta), -mills(-eta))
    }
}

pub(crate) fn check_binary(y: &DVector<f64>) -> Result<()> {
    let rows: Vec<usize> = y.iter().enumerate().filter(|(_, v)| **v != 0.0 && **v != 1.0).map(|(i, _)| i).collect();
    if rows.is_empty() {
        Ok(())
    } else {
        Err(Error::Domain { rows })
    }
}

fn evaluate(d: &Design, beta: &DVector<f64>) -> (f64, DMatrix<f64>) {
    let eta = &d.x * beta;
    let mut ll = 0.0;
    let mut scores = DMatrix::zeros(d.n(), d.p());
    for i in 0..d.n() {
        let (l, s) = probit_terms(d.y[i], eta[i]);
        ll += l;
        for j in 0..d.p() {
            scores[(i, j)] = s * d.x[(i, j)];
        }
    }
    (ll, scores)
}

/// Pooled probit by maximum likelihood; cluster-robust errors when the
/// design has clusters.
pub fn probit(d: &Design) -> Result<FitResult> {
    check_binary(&d.y)?;
    check_rank(&d.x, &d.names)?;
    let obj = |b: &DVector<f64>| {
        let (ll, s) = evaluate(d, b);
        Ok((-ll, -s.row_sum().transpose()))
    };
    let min = bfgs(obj, DVector::zeros(d.p()), BfgsOptions::default())?;
    let beta = min.x;
    let hess = numeric_hessian(|b| Ok(-evaluate(d, b).1.row_sum().transpose()), &beta)?;
    let bread = spd_inverse(&hess, "information matrix")?;
    let (ll, scores) = evaluate(d, &beta);
    let (cov, se_kind) = match &d.cluster {
        Some(c) => (sandwich(&bread, &scores, Some(c)), SeKind::Cluster),
        None => (bread, SeKind::Model),
    };
    Ok(FitResult {
        model: "probit".into(),
        names: d.names.clone(),
        se: diag_sqrt(&cov),
        fitted: (&d.x * &beta).map(normal_cdf),
        coef: beta,
        cov,
        se_kind,
        log_likelihood: ll,
        n: d.n(),
        n_clusters: d.n_clusters(),
        observed: d.y.clone(),
        r2: None,
        adj_r2: None,
        aux: BTreeMap::new(),
        iterations: min.iterations,
        notes: Vec::new(),
    })
}
