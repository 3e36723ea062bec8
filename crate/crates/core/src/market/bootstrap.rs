use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::econ::{normal_cdf, Design, FitResult};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// Resample rescaled residuals onto the fitted values; X is held fixed.
    Residual,
    /// Resample event rows.
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub level: f64,
    pub mode: BootstrapMode,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { replicates: 999, level: 0.90, mode: BootstrapMode::Residual, seed: 0 }
    }
}

impl BootstrapOptions {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 999 {
            return Err(Error::Config(format!("bootstrap.replicates must be at least 999, got {}", self.replicates)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("bootstrap.level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub z0: f64,
    pub acceleration: f64,
    /// Replicates equal up to rounding; the interval is the point estimate.
    pub degenerate: bool,
}

/// Least-squares coefficients, or `None` when `X'X` is singular.
pub(crate) fn ls_coef(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let xtx = x.transpose() * x;
    let chol = xtx.cholesky()?;
    let b = chol.solve(&(x.transpose() * y));
    b.iter().all(|v| v.is_finite()).then_some(b)
}

/// Order statistic at `(B+1)·q`, interpolating between neighbours.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let b = sorted.len();
    let mut pos = ((b + 1) as f64 * q).clamp(1.0, b as f64);
    if (pos - pos.round()).abs() < 1e-9 {
        pos = pos.round();
    }
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo >= b {
        sorted[b - 1]
    } else {
        sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
    }
}

fn sorted(replicates: &[f64]) -> Vec<f64> {
    let mut s = replicates.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Interval for given bias correction and acceleration.
pub fn bca_with(replicates: &[f64], point: f64, z0: f64, a: f64, level: f64) -> Interval {
    let s = sorted(replicates);
    let spread = s[s.len() - 1] - s[0];
    if spread <= 1e-12 * (1.0 + point.abs()) {
        return Interval { lo: point, hi: point, z0, acceleration: a, degenerate: true };
    }
    let std = Normal::standard();
    let alpha = (1.0 - level) / 2.0;
    let adjust = |q: f64| {
        if z0 == 0.0 && a == 0.0 {
            return q;
        }
        let z = std.inverse_cdf(q);
        normal_cdf(z0 + (z0 + z) / (1.0 - a * (z0 + z)))
    };
    Interval {
        lo: quantile(&s, adjust(alpha)),
        hi: quantile(&s, adjust(1.0 - alpha)),
        z0,
        acceleration: a,
        degenerate: false,
    }
}

pub fn percentile_interval(replicates: &[f64], point: f64, level: f64) -> Interval {
    bca_with(replicates, point, 0.0, 0.0, level)
}

/// Bias correction from the share of replicates below the point estimate
/// (ties count half), kept finite by clamping to `[1/(2B), 1 - 1/(2B)]`.
pub fn bias_correction(replicates: &[f64], point: f64) -> f64 {
    let b = replicates.len() as f64;
    let below = replicates.iter().filter(|&&v| v < point).count() as f64;
    let ties = replicates.iter().filter(|&&v| v == point).count() as f64;
    let share = ((below + 0.5 * ties) / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    Normal::standard().inverse_cdf(share)
}

/// Acceleration from leave-one-out estimates; zero when they do not vary.
pub fn acceleration(jackknife: &[f64]) -> f64 {
    let m = jackknife.iter().sum::<f64>() / jackknife.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in jackknife {
        let d = m - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 == 0.0 {
        0.0
    } else {
        s3 / (6.0 * s2.powf(1.5))
    }
}

pub fn bca_interval(replicates: &[f64], point: f64, jackknife: &[f64], level: f64) -> Interval {
    bca_with(replicates, point, bias_correction(replicates, point), acceleration(jackknife), level)
}

/// Leave-one-row-out least-squares coefficients (rows of the result).
pub fn jackknife_coefficients(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    let xtx_inv = (x.transpose() * x)
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient { columns: vec!["X'X".into()] })?;
    let b = &xtx_inv * x.transpose() * y;
    let mut out = DMatrix::zeros(n, p);
    for i in 0..n {
        let xi = x.row(i).transpose();
        let ai = &xtx_inv * &xi;
        let h = xi.dot(&ai);
        if 1.0 - h < 1e-12 {
            // the row is its own support; refit without it
            let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let bi = ls_coef(&x.select_rows(&keep), &y.select_rows(&keep))
                .ok_or_else(|| Error::RankDeficient { columns: vec![format!("without row {i}")] })?;
            out.row_mut(i).copy_from(&bi.transpose());
            continue;
        }
        let e = y[i] - xi.dot(&b);
        let bi = &b - ai * (e / (1.0 - h));
        out.row_mut(i).copy_from(&bi.transpose());
    }
    Ok(out)
}

/// Bootstrap replicates of the least-squares coefficients (`B × p`).
///
/// Replicate `r` draws from its own stream under `(seed, stream, r)`, so
/// results do not depend on the worker count.
pub fn bootstrap_coefficients(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    opts: &BootstrapOptions,
    stream: u64,
) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} rows for {p} coefficients")));
    }
    let b = ls_coef(x, y).ok_or_else(|| Error::RankDeficient { columns: vec!["X'X".into()] })?;
    let fitted = x * &b;
    let resid = y - &fitted;
    let scale = (n as f64 / (n - p) as f64).sqrt();
    let rmean = resid.mean();
    let pool: Vec<f64> = resid.iter().map(|e| (e - rmean) * scale).collect();
    let pinv = (x.transpose() * x).try_inverse().map(|m| m * x.transpose());
    let pinv = pinv.ok_or_else(|| Error::RankDeficient { columns: vec!["X'X".into()] })?;

    let draws: Vec<Result<DVector<f64>>> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::stream(opts.seed, &[stream, r as u64]);
            match opts.mode {
                BootstrapMode::Residual => {
                    let ystar =
                        DVector::from_iterator(n, (0..n).map(|i| fitted[i] + pool[rng.random_range(0..n)]));
                    Ok(&pinv * ystar)
                }
                BootstrapMode::Data => {
                    for _ in 0..1000 {
                        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                        if let Some(bs) = ls_coef(&x.select_rows(&rows), &y.select_rows(&rows)) {
                            return Ok(bs);
                        }
                    }
                    Err(Error::Undefined(format!("replicate {r}: no full-rank resample in 1000 draws")))
                }
            }
        })
        .collect();
    let mut out = DMatrix::zeros(opts.replicates, p);
    for (r, d) in draws.into_iter().enumerate() {
        out.row_mut(r).copy_from(&d?.transpose());
    }
    Ok(out)
}

/// BCa intervals for every coefficient of a least-squares fit.
pub fn bca_bootstrap(design: &Design, fit: &FitResult, opts: &BootstrapOptions, stream: u64) -> Result<Vec<Interval>> {
    opts.validate()?;
    let reps = bootstrap_coefficients(&design.x, &design.y, opts, stream)?;
    let jack = jackknife_coefficients(&design.x, &design.y)?;
    Ok((0..design.p())
        .map(|j| {
            let r: Vec<f64> = reps.column(j).iter().copied().collect();
            let jk: Vec<f64> = jack.column(j).iter().copied().collect();
            bca_interval(&r, fit.coef[j], &jk, opts.level)
        })
        .collect())
}
