use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lasso fit on standardized regressors.
///
/// The objective is `(1/2n) |y - b0 - Z b|^2 + lambda |b|_1`, where each
/// column of `Z` has mean 0 and `(1/n) z'z = 1`. The intercept is not
/// penalized. Columns without variance get a zero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub lambda: f64,
    pub intercept: f64,
    /// Coefficients on the original regressor scale.
    pub coef: DVector<f64>,
    /// Coefficients on the standardized scale.
    pub std_coef: DVector<f64>,
    pub means: DVector<f64>,
    /// Population standard deviations of the columns (0 marks a constant column).
    pub scales: DVector<f64>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 100_000;

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent, run until the largest KKT violation on the
/// standardized scale is below 1e-11 (relative to the response scale).
pub fn lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<LassoFit> {
    let (n, p) = x.shape();
    if y.len() != n || n == 0 {
        return Err(Error::Dimension(format!("X is {n}x{p}, y has {}", y.len())));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lasso penalty {lambda} must be non-negative")));
    }
    let nf = n as f64;
    let means = DVector::from_iterator(p, x.column_iter().map(|c| c.sum() / nf));
    let scales = DVector::from_iterator(
        p,
        x.column_iter().zip(means.iter()).map(|(c, m)| {
            if c.iter().all(|&v| v == c[0]) {
                0.0
            } else {
                (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / nf).sqrt()
            }
        }),
    );
    let z = DMatrix::from_fn(n, p, |i, j| if scales[j] > 0.0 { (x[(i, j)] - means[j]) / scales[j] } else { 0.0 });
    let ybar = y.sum() / nf;
    let mut r = y.map(|v| v - ybar);
    let tol = 1e-11 * (r.norm_squared() / nf).sqrt().max(1e-300);
    let mut b: DVector<f64> = DVector::zeros(p);
    let mut sweeps = 0;
    if lambda.is_finite() {
        loop {
            sweeps += 1;
            for j in 0..p {
                if scales[j] == 0.0 {
                    continue;
                }
                let zj = z.column(j);
                let rho = zj.dot(&r) / nf + b[j];
                let new = soft(rho, lambda);
                let delta = new - b[j];
                if delta != 0.0 {
                    r.axpy(-delta, &zj, 1.0);
                    b[j] = new;
                }
            }
            if kkt_violation(&z, &r, &b, &scales, lambda) < tol {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::NonConvergence {
                    iterations: sweeps,
                    grad_norm: kkt_violation(&z, &r, &b, &scales, lambda),
                    trace: Vec::new(),
                });
            }
        }
    }
    let coef = DVector::from_fn(p, |j, _| if scales[j] > 0.0 { b[j] / scales[j] } else { 0.0 });
    let intercept = ybar - coef.dot(&means);
    Ok(LassoFit { lambda, intercept, coef, std_coef: b, means, scales, sweeps })
}

fn kkt_violation(z: &DMatrix<f64>, r: &DVector<f64>, b: &DVector<f64>, scales: &DVector<f64>, lambda: f64) -> f64 {
    let nf = z.nrows() as f64;
    (0..z.ncols())
        .filter(|&j| scales[j] > 0.0)
        .map(|j| {
            let g = z.column(j).dot(r) / nf;
            if b[j] != 0.0 {
                (g - lambda * b[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

impl LassoFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        (x * &self.coef).add_scalar(self.intercept)
    }
}
