use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::linalg::{check_rank, diag_sqrt, sandwich, spd_inverse};
use super::{logistic, Design, FitResult, SeKind};
use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

fn quasi_ll(y: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    y.iter()
        .zip(mu.iter())
        .map(|(&y, &m)| {
            let m = m.clamp(1e-300, 1.0 - 1e-16);
            let a = if y > 0.0 { y * m.ln() } else { 0.0 };
            let b = if y < 1.0 { (1.0 - y) * (1.0 - m).ln() } else { 0.0 };
            a + b
        })
        .sum()
}

/// Bernoulli quasi-likelihood with a logit link for responses in [0, 1],
/// fitted by Newton–Raphson. Errors are always sandwich-robust
/// (cluster-robust when the design has clusters).
pub fn fractional_logit(d: &Design) -> Result<FitResult> {
    if let Some(i) = d.y.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain { rows: vec![i] });
    }
    check_rank(&d.x, &d.names)?;
    let (n, p) = (d.n(), d.p());
    let mut beta = DVector::zeros(p);
    let mut ll = quasi_ll(&d.y, &(&d.x * &beta).map(logistic));
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        let mu = (&d.x * &beta).map(logistic);
        let grad = d.x.transpose() * (&d.y - &mu);
        let mut xw = d.x.clone();
        for i in 0..n {
            let w = mu[i] * (1.0 - mu[i]);
            xw.row_mut(i).scale_mut(w);
        }
        let info = d.x.transpose() * xw;
        let step = spd_inverse(&info, "quasi-information")? * &grad;
        let mut t = 1.0;
        let mut next = &beta + &step * t;
        let mut next_ll = quasi_ll(&d.y, &(&d.x * &next).map(logistic));
        while next_ll < ll - 1e-12 * ll.abs() && t > 1e-8 {
            t *= 0.5;
            next = &beta + &step * t;
            next_ll = quasi_ll(&d.y, &(&d.x * &next).map(logistic));
        }
        let change = (&next - &beta).amax();
        beta = next;
        ll = next_ll;
        trace.push(ll);
        if change < 1e-12 * (1.0 + beta.amax()) || grad.amax() < 1e-13 * n as f64 {
            converged = true;
            break;
        }
    }
    let mu = (&d.x * &beta).map(logistic);
    let grad = d.x.transpose() * (&d.y - &mu);
    if !converged || !beta.iter().all(|b| b.is_finite()) {
        return Err(Error::NonConvergence { iterations, grad_norm: grad.amax(), trace });
    }
    let mut xw = d.x.clone();
    let mut scores = DMatrix::zeros(n, p);
    for i in 0..n {
        xw.row_mut(i).scale_mut(mu[i] * (1.0 - mu[i]));
        let r = d.y[i] - mu[i];
        for j in 0..p {
            scores[(i, j)] = r * d.x[(i, j)];
        }
    }
    let bread = spd_inverse(&(d.x.transpose() * xw), "quasi-information")?;
    let (cov, se_kind) = match &d.cluster {
        Some(c) => (sandwich(&bread, &scores, Some(c)), SeKind::Cluster),
        None => (sandwich(&bread, &scores, None), SeKind::Robust),
    };
    Ok(FitResult {
        model: "fractional_logit".into(),
        names: d.names.clone(),
        se: diag_sqrt(&cov),
        coef: beta,
        cov,
        se_kind,
        log_likelihood: ll,
        n,
        n_clusters: d.n_clusters(),
        observed: d.y.clone(),
        fitted: mu,
        r2: None,
        adj_r2: None,
        aux: BTreeMap::new(),
        iterations,
        notes: Vec::new(),
    })
}
