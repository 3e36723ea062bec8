use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::linalg::{check_rank, diag_sqrt, sandwich, spd_inverse};
use super::{Design, FitResult, SeKind};
use crate::error::{Error, Result};

/// Least squares with HC1 errors, or cluster-robust errors when the design
/// has clusters (small-sample factor `G/(G-1) * (n-1)/(n-p)`).
pub fn ols_robust(d: &Design) -> Result<FitResult> {
    let (n, p) = (d.n(), d.p());
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} rows for {p} coefficients")));
    }
    check_rank(&d.x, &d.names)?;
    let bread = spd_inverse(&(d.x.transpose() * &d.x), "X'X")?;
    let beta = &bread * d.x.transpose() * &d.y;
    let fitted = &d.x * &beta;
    let resid = &d.y - &fitted;
    let mut scores = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            scores[(i, j)] = resid[i] * d.x[(i, j)];
        }
    }
    let (cov, se_kind) = match &d.cluster {
        Some(c) => {
            let adj = (n as f64 - 1.0) / (n - p) as f64;
            (sandwich(&bread, &scores, Some(c)) * adj, SeKind::Cluster)
        }
        None => (sandwich(&bread, &scores, None), SeKind::Robust),
    };
    let ssr = resid.norm_squared();
    let ybar = d.y.mean();
    let sst = d.y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };
    let adj = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - p) as f64;
    let nf = n as f64;
    let ll = if ssr > 0.0 {
        -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    let mut aux = BTreeMap::new();
    aux.insert("sigma2".to_string(), ssr / (n - p) as f64);
    Ok(FitResult {
        model: "ols".into(),
        names: d.names.clone(),
        se: diag_sqrt(&cov),
        coef: beta,
        cov,
        se_kind,
        log_likelihood: ll,
        n,
        n_clusters: d.n_clusters(),
        observed: d.y.clone(),
        fitted,
        r2: Some(r2),
        adj_r2: Some(adj),
        aux,
        iterations: 1,
        notes: Vec::new(),
    })
}
