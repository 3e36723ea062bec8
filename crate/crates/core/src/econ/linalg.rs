use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Fails with the names of columns that are linear combinations of the
/// columns before them (or are identically zero).
pub fn check_rank(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut r = col.clone();
        for b in &basis {
            let d = b.dot(&r);
            r -= b * d;
        }
        // second pass for numerical orthogonality
        for b in &basis {
            let d = b.dot(&r);
            r -= b * d;
        }
        let rn = r.norm();
        if norm == 0.0 || rn <= 1e-9 * norm {
            bad.push(names[j].clone());
        } else {
            basis.push(r / rn);
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::RankDeficient { columns: bad })
    }
}

/// Inverse of a symmetric positive-definite matrix.
pub(crate) fn spd_inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let sym = (a + a.transpose()) * 0.5;
    sym.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Undefined(format!("{what} is not positive definite")))
}

pub(crate) fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// `bread * meat * bread` with the meat built from per-row scores.
///
/// With clusters, scores are summed within cluster and scaled by
/// `G / (G - 1)`; otherwise rows are their own clusters and the scale is
/// `n / (n - p)`.
pub(crate) fn sandwich(bread: &DMatrix<f64>, scores: &DMatrix<f64>, cluster: Option<&[usize]>) -> DMatrix<f64> {
    let (n, p) = scores.shape();
    let (meat, scale) = match cluster {
        Some(c) => {
            let g = c.iter().max().map_or(0, |m| m + 1);
            let mut sums = DMatrix::zeros(g, p);
            for (i, &ci) in c.iter().enumerate() {
                let mut row = sums.row_mut(ci);
                row += scores.row(i);
            }
            (sums.transpose() * &sums, g as f64 / (g as f64 - 1.0))
        }
        None => (scores.transpose() * scores, n as f64 / (n - p) as f64),
    };
    symmetrize(bread * meat * bread * scale)
}

pub(crate) fn diag_sqrt(cov: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(cov.nrows(), (0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()))
}
