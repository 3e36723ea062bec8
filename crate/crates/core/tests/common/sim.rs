//! Simulation designs with known coefficients.

use hidden_dissent::econ::Design;
use hidden_dissent::tensor::sigmoid as logistic;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::rng;
use rand_distr::{Beta, Binomial, Distribution, Normal};

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).unwrap().sample(r)
}

pub fn beta_draw(mu: f64, phi: f64, r: &mut ChaCha8Rng) -> f64 {
    let v: f64 = Beta::new(mu * phi, (1.0 - mu) * phi).unwrap().sample(r);
    v.clamp(1e-9, 1.0 - 1e-9)
}

/// `y ~ Beta` with logit mean `-0.5 + x` and precision 20.
pub fn beta_design(n: usize, r: &mut ChaCha8Rng) -> Design {
    let x: Vec<f64> = (0..n).map(|_| normal(r)).collect();
    let y = x.iter().map(|xi| beta_draw(logistic(-0.5 + xi), 20.0, r)).collect();
    Design::with_intercept(y, &[("x", x)]).unwrap()
}

/// Share of successes out of ten trials with logit mean `0.3 - 0.7 x`.
pub fn fractional_design(n: usize, r: &mut ChaCha8Rng) -> Design {
    let x: Vec<f64> = (0..n).map(|_| normal(r)).collect();
    let y = x
        .iter()
        .map(|xi| Binomial::new(10, logistic(0.3 - 0.7 * xi)).unwrap().sample(r) as f64 / 10.0)
        .collect();
    Design::with_intercept(y, &[("x", x)]).unwrap()
}

/// `y = 1 + 2x + e` with `sd(e) = sqrt(1 + x^2)` when `hetero`, else 1.
pub fn ols_design(n: usize, hetero: bool, r: &mut ChaCha8Rng) -> Design {
    let x: Vec<f64> = (0..n).map(|_| normal(r)).collect();
    let y = x
        .iter()
        .map(|xi| {
            let sd = if hetero { (1.0 + xi * xi).sqrt() } else { 1.0 };
            1.0 + 2.0 * xi + sd * normal(r)
        })
        .collect();
    Design::with_intercept(y, &[("x", x)]).unwrap()
}

/// Clustered beta responses: logit mean `-0.5 + x + u_g`, `u_g ~ N(0, sigma^2)`.
pub fn mixed_beta_design(groups: usize, per: usize, sigma: f64, r: &mut ChaCha8Rng) -> Design {
    let (mut y, mut x, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..groups {
        let u = sigma * normal(r);
        for _ in 0..per {
            let xi = normal(r);
            y.push(beta_draw(logistic(-0.5 + xi + u), 20.0, r));
            x.push(xi);
            g.push(format!("g{k}"));
        }
    }
    Design::with_intercept(y, &[("x", x)]).unwrap().with_clusters(&g).unwrap()
}

/// Clustered binary responses: `1[0.3 - 0.8 x + u_g + e > 0]`.
pub fn mixed_probit_design(groups: usize, per: usize, sigma: f64, r: &mut ChaCha8Rng) -> Design {
    let (mut y, mut x, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..groups {
        let u = sigma * normal(r);
        for _ in 0..per {
            let xi = normal(r);
            y.push(f64::from(u8::from(0.3 - 0.8 * xi + u + normal(r) > 0.0)));
            x.push(xi);
            g.push(format!("g{k}"));
        }
    }
    Design::with_intercept(y, &[("x", x)]).unwrap().with_clusters(&g).unwrap()
}

/// Confounded partially linear design: ten confounders, two of which
/// drive both the treatment and the outcome. Noise is large relative to
/// the fixed Lasso penalty so first-stage shrinkage leaves little
/// residual confounding.
pub fn dml_design(n: usize, theta: f64, sd_t: f64, r: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, nalgebra::DMatrix<f64>) {
    let x = nalgebra::DMatrix::from_fn(n, 10, |_, _| normal(r));
    let mut t = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let ti = 5.0 * x[(i, 0)] + 5.0 * x[(i, 1)] + sd_t * normal(r);
        let yi = theta * ti + 5.0 * x[(i, 0)] + 5.0 * x[(i, 1)] + 3.0 * x[(i, 2)] + 10.0 * normal(r);
        t.push(ti);
        y.push(yi);
    }
    (y, t, x)
}

/// Whether every named coefficient lies within three standard errors of its true value.
pub fn within_3se(fit: &hidden_dissent::econ::FitResult, truth: &[(&str, f64)]) -> bool {
    truth.iter().all(|(name, v)| {
        let (b, se) = fit.get(name).unwrap();
        (b - v).abs() <= 3.0 * se
    })
}

/// Plain logit by Newton–Raphson written out with explicit loops.
pub fn newton_logit(y: &[f64], x: &[Vec<f64>]) -> Vec<f64> {
    let p = x[0].len();
    let mut b = vec![0.0; p];
    for _ in 0..100 {
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        for (yi, xi) in y.iter().zip(x) {
            let eta: f64 = xi.iter().zip(&b).map(|(a, c)| a * c).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            for j in 0..p {
                g[j] += (yi - mu) * xi[j];
                for k in 0..p {
                    h[j][k] += mu * (1.0 - mu) * xi[j] * xi[k];
                }
            }
        }
        // solve h * step = g by Gaussian elimination
        let mut a = h.clone();
        let mut rhs = g.clone();
        for c in 0..p {
            let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            rhs.swap(c, piv);
            for r in c + 1..p {
                let f = a[r][c] / a[c][c];
                for k in c..p {
                    a[r][k] -= f * a[c][k];
                }
                rhs[r] -= f * rhs[c];
            }
        }
        let mut step = vec![0.0; p];
        for c in (0..p).rev() {
            let s: f64 = (c + 1..p).map(|k| a[c][k] * step[k]).sum();
            step[c] = (rhs[c] - s) / a[c][c];
        }
        for j in 0..p {
            b[j] += step[j];
        }
        if step.iter().all(|s| s.abs() < 1e-14) {
            break;
        }
    }
    b
}

/// Event panel with `outcome = 0.01 + b1·hd + b2·s + N(0, sd)` at every horizon.
pub fn event_panel(n: usize, b1: f64, b2: f64, sd: f64, r: &mut ChaCha8Rng) -> hidden_dissent::market::EventPanel {
    use hidden_dissent::market::{Event, EventPanel, HORIZONS};
    let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let events: Vec<Event> = (0..n)
        .map(|i| Event {
            date: start + chrono::Duration::days(45 * i as i64),
            hd: r.random_range(0.0..1.0),
            sentiment: r.random_range(-1.0..1.0),
        })
        .collect();
    let rows = events
        .iter()
        .map(|e| std::array::from_fn(|_| Some(0.01 + b1 * e.hd + b2 * e.sentiment + sd * normal(r))))
        .collect::<Vec<[Option<f64>; HORIZONS]>>();
    let mut panel = EventPanel::new(events).unwrap();
    panel.set_outcomes("SIM", rows).unwrap();
    panel
}

/// Share of simulated panels whose 90% BCa band on the dissent coefficient
/// (horizon 0) covers the true value.
pub fn bca_coverage(panels: usize, replicates: usize, seed: u64) -> f64 {
    use hidden_dissent::market::{bca_bootstrap, BootstrapOptions};
    use rayon::prelude::*;
    let hits: usize = (0..panels)
        .into_par_iter()
        .map(|k| {
            let mut r = rng(hidden_dissent::seed::derive(seed, &[k as u64]));
            let panel = event_panel(80, 0.3, 0.0, 0.05, &mut r);
            let y: Vec<f64> = panel.outcomes["SIM"].iter().map(|row| row[0].unwrap()).collect();
            let d = Design::with_intercept(
                y,
                &[
                    ("hd", panel.events.iter().map(|e| e.hd).collect()),
                    ("sentiment", panel.events.iter().map(|e| e.sentiment).collect()),
                ],
            )
            .unwrap();
            let opts = BootstrapOptions { replicates, seed: seed ^ k as u64, ..BootstrapOptions::default() };
            let fit = hidden_dissent::econ::ols_robust(&d).unwrap();
            let band = bca_bootstrap(&d, &fit, &opts, 0).unwrap()[1];
            usize::from(band.lo <= 0.3 && 0.3 <= band.hi)
        })
        .sum();
    hits as f64 / panels as f64
}
