use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{digamma, ln_gamma};

use super::linalg::{check_rank, diag_sqrt, sandwich, spd_inverse};
use super::optim::{bfgs, numeric_hessian, BfgsOptions};
use super::{logistic, Design, FitResult, SeKind};
use crate::error::{Error, Result};

/// Per-row log-density of a beta response with mean `mu` and precision `phi`.
pub(crate) fn beta_ln_density(y: f64, mu: f64, phi: f64) -> f64 {
    let (a, b) = (mu * phi, (1.0 - mu) * phi);
    ln_gamma(phi) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * y.ln() + (b - 1.0) * (1.0 - y).ln()
}

/// Derivatives of the beta log-density with respect to the linear
/// predictor (logit mean link) and to `ln phi`.
pub(crate) fn beta_scores(y: f64, eta: f64, phi: f64) -> (f64, f64) {
    let mu = logistic(eta).clamp(1e-12, 1.0 - 1e-12);
    let (a, b) = (mu * phi, (1.0 - mu) * phi);
    let (ly, l1y) = (y.ln(), (1.0 - y).ln());
    let (da, db) = (digamma(a), digamma(b));
    let d_eta = phi * ((ly - l1y) - (da - db)) * mu * (1.0 - mu);
    let d_lnphi = phi * (digamma(phi) - mu * da - (1.0 - mu) * db + mu * ly + (1.0 - mu) * l1y);
    (d_eta, d_lnphi)
}

pub(crate) fn check_open_unit(y: &DVector<f64>) -> Result<()> {
    let rows: Vec<usize> = y.iter().enumerate().filter(|(_, v)| !(**v > 0.0 && **v < 1.0)).map(|(i, _)| i).collect();
    if rows.is_empty() {
        Ok(())
    } else {
        Err(Error::Domain { rows })
    }
}

fn evaluate(d: &Design, theta: &DVector<f64>) -> (f64, DMatrix<f64>) {
    let p = d.p();
    let beta = theta.rows(0, p);
    let phi = theta[p].exp();
    let eta = &d.x * beta;
    let mut ll = 0.0;
    let mut scores = DMatrix::zeros(d.n(), p + 1);
    for i in 0..d.n() {
        let mu = logistic(eta[i]).clamp(1e-12, 1.0 - 1e-12);
        ll += beta_ln_density(d.y[i], mu, phi);
        let (de, dp) = beta_scores(d.y[i], eta[i], phi);
        for j in 0..p {
            scores[(i, j)] = de * d.x[(i, j)];
        }
        scores[(i, p)] = dp;
    }
    (ll, scores)
}

/// OLS coefficients of `y` on `x`.
pub(crate) fn ols_coef(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let xtx = x.transpose() * x;
    let inv = spd_inverse(&xtx, "X'X")?;
    Ok(inv * x.transpose() * y)
}

/// Beta regression with a logit mean link and constant precision, by
/// maximum likelihood. Errors are cluster-robust when the design has
/// clusters, otherwise the inverse observed information.
pub fn beta_regression(d: &Design) -> Result<FitResult> {
    check_open_unit(&d.y)?;
    check_rank(&d.x, &d.names)?;
    let p = d.p();
    let z = d.y.map(|v| (v / (1.0 - v)).ln());
    let b0 = ols_coef(&d.x, &z)?;
    let mu0 = (&d.x * &b0).map(logistic);
    let resid_var = (&d.y - &mu0).norm_squared() / d.n() as f64;
    let mean_mv = mu0.iter().map(|m| m * (1.0 - m)).sum::<f64>() / d.n() as f64;
    let phi0 = if resid_var > 0.0 { (mean_mv / resid_var - 1.0).max(1.0) } else { 10.0 };
    let mut theta0 = DVector::zeros(p + 1);
    theta0.rows_mut(0, p).copy_from(&b0);
    theta0[p] = phi0.ln();

    let objective = |t: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let (ll, s) = evaluate(d, t);
        let g = s.row_sum().transpose();
        Ok((-ll, -g))
    };
    let min = bfgs(objective, theta0, BfgsOptions::default())?;
    let theta = min.x;
    let hess = numeric_hessian(|t| Ok(-evaluate(d, t).1.row_sum().transpose()), &theta)?;
    let bread = spd_inverse(&hess, "information matrix")?;
    let (ll, scores) = evaluate(d, &theta);
    let (cov, se_kind) = match &d.cluster {
        Some(c) => (sandwich(&bread, &scores, Some(c)), SeKind::Cluster),
        None => (bread, SeKind::Model),
    };
    let mut names = d.names.clone();
    names.push("ln_phi".into());
    let fitted = (&d.x * theta.rows(0, p)).map(logistic);
    let mut aux = BTreeMap::new();
    aux.insert("phi".to_string(), theta[p].exp());
    Ok(FitResult {
        model: "beta".into(),
        names,
        se: diag_sqrt(&cov),
        coef: theta,
        cov,
        se_kind,
        log_likelihood: ll,
        n: d.n(),
        n_clusters: d.n_clusters(),
        observed: d.y.clone(),
        fitted,
        r2: None,
        adj_r2: None,
        aux,
        iterations: min.iterations,
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_match_finite_differences() {
        for &(y, eta, phi) in &[(0.3, 0.2, 5.0), (0.9, -1.0, 30.0), (0.05, 0.7, 2.0)] {
            let (de, dp) = beta_scores(y, eta, phi);
            let f = |e: f64, lp: f64| beta_ln_density(y, logistic(e), lp.exp());
            let h = 1e-6;
            let fe = (f(eta + h, phi.ln()) - f(eta - h, phi.ln())) / (2.0 * h);
            let fp = (f(eta, phi.ln() + h) - f(eta, phi.ln() - h)) / (2.0 * h);
            assert!((de - fe).abs() < 1e-6 && (dp - fp).abs() < 1e-6);
        }
    }

    #[test]
    fn boundary_response_is_a_domain_error() {
        let d = Design::with_intercept(vec![0.2, 0.0, 0.5, 1.0], &[("x", vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
        assert!(matches!(beta_regression(&d), Err(Error::Domain { rows }) if rows == vec![1, 3]));
    }
}
