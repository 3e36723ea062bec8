use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Converged when the gradient's max-norm falls below
    /// `gtol * max(1, |f|)`.
    pub gtol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 1000, gtol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad: DVector<f64>,
    pub iterations: usize,
}

/// Quasi-Newton minimization with an Armijo backtracking line search.
///
/// `f` returns the objective and its gradient. Points where the objective
/// is not finite are rejected by the line search.
pub fn bfgs<F>(f: F, x0: DVector<f64>, opts: BfgsOptions) -> Result<Minimum>
where
    F: Fn(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    let p = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Undefined("objective is not finite at the starting point".into()));
    }
    let mut h = DMatrix::<f64>::identity(p, p);
    let mut trace = vec![fx];
    let mut first = true;
    for it in 0..opts.max_iter {
        let gnorm = g.amax();
        if gnorm <= opts.gtol * fx.abs().max(1.0) {
            return Ok(Minimum { x, value: fx, grad: g, iterations: it });
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(p, p);
            d = -g.clone();
            slope = g.dot(&d);
        }
        let mut step = if first { (1.0 / g.norm()).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &d * step;
            if let Ok((fn_, gn)) = f(&xn) {
                if fn_.is_finite() && gn.iter().all(|v| v.is_finite()) && fn_ <= fx + 1e-4 * step * slope {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // No decrease available along the search direction: accept the
            // point if the gradient is already negligible.
            if gnorm <= 1e-5 * fx.abs().max(1.0) {
                return Ok(Minimum { x, value: fx, grad: g, iterations: it });
            }
            return Err(Error::NonConvergence { iterations: it, grad_norm: gnorm, trace });
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first {
                h *= sy / y.dot(&y);
                first = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy)) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let stalled = (fx - fn_).abs() <= 1e-15 * fx.abs().max(1.0) && gn.amax() <= 1e-6 * fn_.abs().max(1.0);
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
        if stalled {
            return Ok(Minimum { x, value: fx, grad: g, iterations: it + 1 });
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, grad_norm: g.amax(), trace })
}

/// Hessian from central differences of an analytic gradient, symmetrized.
pub fn numeric_hessian<G>(grad: G, x: &DVector<f64>) -> Result<DMatrix<f64>>
where
    G: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let p = x.len();
    let mut h = DMatrix::zeros(p, p);
    for j in 0..p {
        let step = 1e-5 * x[j].abs().max(1.0);
        let mut up = x.clone();
        up[j] += step;
        let mut dn = x.clone();
        dn[j] -= step;
        let col = (grad(&up)? - grad(&dn)?) / (2.0 * step);
        h.set_column(j, &col);
    }
    Ok(super::linalg::symmetrize(h))
}
