use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::beta::{beta_ln_density, beta_regression, beta_scores, check_open_unit};
use super::linalg::{check_rank, diag_sqrt, spd_inverse};
use super::optim::{bfgs, numeric_hessian, BfgsOptions};
use super::probit::{check_binary, probit, probit_terms};
use super::special::{ln_normal_pdf, normal_cdf};
use super::{logistic, Design, FitResult, SeKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Beta,
    Probit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedOptions {
    /// Quadrature nodes per cluster.
    pub nodes: usize,
    /// Random-intercept standard deviations below this are treated as zero.
    pub sigma_floor: f64,
}

impl Default for MixedOptions {
    fn default() -> Self {
        Self { nodes: 15, sigma_floor: 1e-3 }
    }
}

/// Gauss–Hermite nodes and weights for the weight `exp(-t^2)`, ascending,
/// from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_hermite(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::zeros(q, q);
    for k in 1..q {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

struct Problem<'a> {
    d: &'a Design,
    family: Family,
    clusters: Vec<Vec<usize>>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Quadrature points (in standard-normal units) and log weights per cluster.
struct Adaptation {
    u: Vec<Vec<f64>>,
    log_w: Vec<Vec<f64>>,
}

impl Problem<'_> {
    fn p(&self) -> usize {
        self.d.p()
    }

    fn n_params(&self) -> usize {
        self.p() + if self.family == Family::Beta { 2 } else { 1 }
    }

    fn unpack(&self, t: &DVector<f64>) -> (DVector<f64>, f64, f64) {
        let p = self.p();
        let phi = if self.family == Family::Beta { t[p].exp() } else { 0.0 };
        (t.rows(0, p).into_owned(), phi, t[t.len() - 1].exp())
    }

    /// Log-density of one row and its derivatives with respect to the
    /// linear predictor and `ln phi`.
    fn row(&self, i: usize, eta: f64, phi: f64) -> (f64, f64, f64) {
        let y = self.d.y[i];
        match self.family {
            Family::Probit => {
                let (l, s) = probit_terms(y, eta);
                (l, s, 0.0)
            }
            Family::Beta => {
                let mu = logistic(eta).clamp(1e-12, 1.0 - 1e-12);
                let (se, sp) = beta_scores(y, eta, phi);
                (beta_ln_density(y, mu, phi), se, sp)
            }
        }
    }

    /// Derivative of the cluster's log joint density in `u`.
    fn mode_slope(&self, rows: &[usize], eta: &DVector<f64>, phi: f64, sigma: f64, u: f64) -> f64 {
        rows.iter().map(|&i| sigma * self.row(i, eta[i] + sigma * u, phi).1).sum::<f64>() - u
    }

    fn adapt(&self, t: &DVector<f64>) -> Adaptation {
        let (beta, phi, sigma) = self.unpack(t);
        let eta = &self.d.x * beta;
        let mut u_all = Vec::with_capacity(self.clusters.len());
        let mut lw_all = Vec::with_capacity(self.clusters.len());
        for rows in &self.clusters {
            let slope = |u: f64| self.mode_slope(rows, &eta, phi, sigma, u);
            let (mut lo, mut hi) = (-1.0, 1.0);
            while slope(lo) < 0.0 && lo > -1e3 {
                lo *= 2.0;
            }
            while slope(hi) > 0.0 && hi < 1e3 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
            let mode = 0.5 * (lo + hi);
            let h = 1e-4;
            let curv = -(slope(mode + h) - slope(mode - h)) / (2.0 * h);
            let scale = if curv > 0.0 && curv.is_finite() { curv.sqrt().recip() } else { 1.0 };
            let mut u = Vec::with_capacity(self.nodes.len());
            let mut lw = Vec::with_capacity(self.nodes.len());
            for (&tq, &wq) in self.nodes.iter().zip(&self.weights) {
                let uq = mode + std::f64::consts::SQRT_2 * scale * tq;
                u.push(uq);
                lw.push((std::f64::consts::SQRT_2 * scale * wq).ln() + tq * tq + ln_normal_pdf(uq));
            }
            u_all.push(u);
            lw_all.push(lw);
        }
        Adaptation { u: u_all, log_w: lw_all }
    }

    /// Marginal log-likelihood and gradient with the quadrature points held fixed.
    fn evaluate(&self, t: &DVector<f64>, a: &Adaptation) -> (f64, DVector<f64>) {
        let p = self.p();
        let (beta, phi, sigma) = self.unpack(t);
        let eta = &self.d.x * beta;
        let k = self.n_params();
        let mut ll = 0.0;
        let mut grad = DVector::zeros(k);
        let q = self.nodes.len();
        let mut terms = vec![0.0; q];
        let mut node_grads = DMatrix::zeros(q, k);
        for (g, rows) in self.clusters.iter().enumerate() {
            node_grads.fill(0.0);
            for j in 0..q {
                let uq = a.u[g][j];
                let mut total = a.log_w[g][j];
                for &i in rows {
                    let (l, se, sp) = self.row(i, eta[i] + sigma * uq, phi);
                    total += l;
                    for c in 0..p {
                        node_grads[(j, c)] += se * self.d.x[(i, c)];
                    }
                    if self.family == Family::Beta {
                        node_grads[(j, p)] += sp;
                    }
                    node_grads[(j, k - 1)] += se * sigma * uq;
                }
                terms[j] = total;
            }
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = terms.iter().map(|v| (v - m).exp()).sum();
            ll += m + z.ln();
            for j in 0..q {
                let w = (terms[j] - m).exp() / z;
                grad += node_grads.row(j).transpose() * w;
            }
        }
        (ll, grad)
    }
}

fn pooled(d: &Design, family: Family) -> Result<FitResult> {
    let mut plain = d.clone();
    plain.cluster = None;
    match family {
        Family::Beta => beta_regression(&plain),
        Family::Probit => probit(&plain),
    }
}

fn pooled_fallback(d: &Design, family: Family, note: &str) -> Result<FitResult> {
    let mut fit = pooled(d, family)?;
    fit.model = format!("mixed_{}", family_name(family));
    fit.n_clusters = d.n_clusters();
    fit.aux.insert("sigma_u2".into(), 0.0);
    fit.notes.push(note.to_string());
    Ok(fit)
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Beta => "beta",
        Family::Probit => "probit",
    }
}

/// Random-intercept beta or probit model: a Gaussian intercept per cluster
/// integrated out by adaptive Gauss–Hermite quadrature.
///
/// Quadrature points are centered on each cluster's posterior mode and
/// scaled by its curvature; they are held fixed while the likelihood is
/// maximized and re-centered until the log-likelihood changes by less
/// than 1e-8. Standard errors are the inverse observed information.
pub fn random_intercept(d: &Design, family: Family, opts: MixedOptions) -> Result<FitResult> {
    if opts.nodes < 3 {
        return Err(Error::Config(format!("{} quadrature nodes; at least 3 are required", opts.nodes)));
    }
    let Some(labels) = &d.cluster else {
        return Err(Error::Config("random-intercept model needs cluster labels".into()));
    };
    match family {
        Family::Beta => check_open_unit(&d.y)?,
        Family::Probit => check_binary(&d.y)?,
    }
    check_rank(&d.x, &d.names)?;
    let g = d.n_clusters().unwrap_or(0);
    if g < 2 {
        return Err(Error::InsufficientData(format!("{g} cluster(s); at least 2 are required")));
    }
    let mut clusters = vec![Vec::new(); g];
    for (i, &c) in labels.iter().enumerate() {
        clusters[c].push(i);
    }
    if clusters.iter().all(|c| c.len() == 1) {
        let mut fit = pooled_fallback(d, family, "one observation per cluster: intercept variance not identified, pooled fit reported")?;
        fit.aux.insert("variance_unidentified".into(), 1.0);
        return Ok(fit);
    }
    let (nodes, weights) = gauss_hermite(opts.nodes);
    let prob = Problem { d, family, clusters, nodes, weights };

    let start = pooled(d, family)?;
    let mut theta = DVector::zeros(prob.n_params());
    theta.rows_mut(0, start.coef.len()).copy_from(&start.coef);
    let k = prob.n_params();
    theta[k - 1] = 0.5f64.ln();

    let mut adapt = prob.adapt(&theta);
    let mut ll = prob.evaluate(&theta, &adapt).0;
    let mut iterations = 0;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let obj = |t: &DVector<f64>| {
            let (l, gr) = prob.evaluate(t, &adapt);
            Ok((-l, -gr))
        };
        let min = match bfgs(obj, theta.clone(), BfgsOptions::default()) {
            Ok(m) => m,
            Err(e) => {
                if theta[k - 1].exp() < opts.sigma_floor * 10.0 {
                    return pooled_fallback(d, family, "random-intercept variance collapsed to zero; pooled fit reported");
                }
                return Err(e);
            }
        };
        iterations += min.iterations;
        theta = min.x;
        adapt = prob.adapt(&theta);
        let next = prob.evaluate(&theta, &adapt).0;
        let change = (next - ll).abs();
        ll = next;
        if change < 1e-8 {
            break;
        }
        if rounds >= 100 {
            return Err(Error::NonConvergence { iterations, grad_norm: change, trace: vec![ll] });
        }
    }
    let sigma = theta[k - 1].exp();
    if sigma < opts.sigma_floor {
        return pooled_fallback(d, family, "random-intercept variance collapsed to zero; pooled fit reported");
    }
    let hess = numeric_hessian(|t| Ok(-prob.evaluate(t, &adapt).1), &theta)?;
    let cov = spd_inverse(&hess, "information matrix")?;
    let (beta, phi, _) = prob.unpack(&theta);
    let eta = &d.x * beta;
    let fitted = match family {
        Family::Beta => eta.map(logistic),
        Family::Probit => eta.map(|e| normal_cdf(e / (1.0 + sigma * sigma).sqrt())),
    };
    let mut names = d.names.clone();
    let mut aux = BTreeMap::new();
    if family == Family::Beta {
        names.push("ln_phi".into());
        aux.insert("phi".to_string(), phi);
    }
    names.push("ln_sigma_u".into());
    aux.insert("sigma_u2".to_string(), sigma * sigma);
    aux.insert("quadrature_nodes".to_string(), opts.nodes as f64);
    Ok(FitResult {
        model: format!("mixed_{}", family_name(family)),
        names,
        se: diag_sqrt(&cov),
        coef: theta,
        cov,
        se_kind: SeKind::Model,
        log_likelihood: ll,
        n: d.n(),
        n_clusters: Some(g),
        observed: d.y.clone(),
        fitted,
        r2: None,
        adj_r2: None,
        aux,
        iterations,
        notes: Vec::new(),
    })
}
