use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Columns that entered the decomposition.
    pub columns: Vec<String>,
    /// Zero-variance columns left out.
    pub dropped: Vec<String>,
    /// `p x k`; each column is a unit-length loading vector whose
    /// largest-magnitude entry is positive.
    pub loadings: DMatrix<f64>,
    /// Eigenvalues of the correlation matrix, descending (all `p`).
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// `n x k` projections of the standardized data.
    pub scores: DMatrix<f64>,
}

/// Principal components of the correlation matrix of `data`.
///
/// Columns are standardized with the sample sd before the decomposition.
pub fn pca(data: &DMatrix<f64>, names: &[String], k: usize) -> Result<PcaResult> {
    let n = data.nrows();
    if names.len() != data.ncols() {
        return Err(Error::Dimension(format!("{} names for {} columns", names.len(), data.ncols())));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} rows; PCA needs at least 2")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite entry in PCA input".into()));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..data.ncols() {
        let col = data.column(j);
        if col.iter().all(|&v| v == col[0]) {
            dropped.push(names[j].clone());
        } else {
            kept.push(j);
        }
    }
    let p = kept.len();
    if k == 0 || k > p {
        return Err(Error::Config(format!("{k} components requested from {p} usable columns")));
    }
    let mut z = DMatrix::zeros(n, p);
    for (c, &j) in kept.iter().enumerate() {
        let col = data.column(j);
        let mean = col.sum() / n as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        for i in 0..n {
            z[(i, c)] = (col[i] - mean) / sd;
        }
    }
    let corr = (z.transpose() * &z) / (n - 1) as f64;
    let corr = (&corr + corr.transpose()) * 0.5;
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let mut loadings = DMatrix::zeros(p, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(i);
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        loadings.set_column(c, &(v * sign));
    }
    let scores = &z * &loadings;
    Ok(PcaResult {
        columns: kept.iter().map(|&j| names[j].clone()).collect(),
        dropped,
        explained_variance_ratio: eigenvalues.iter().take(k).map(|e| e / total).collect(),
        eigenvalues,
        loadings,
        scores,
    })
}

/// Writes `component,ratio,<column...>` loading rows, then a blank-free
/// score block `meeting_id,PC1..PCk` to `scores`.
pub fn write_pca_csv<W: Write, S: Write>(loadings_out: W, scores_out: S, result: &PcaResult, meeting_ids: &[String]) -> Result<()> {
    let err = |e: csv::Error| Error::Data(e.to_string());
    let mut w = csv::Writer::from_writer(loadings_out);
    let mut header = vec!["component".to_string(), "explained_variance_ratio".to_string()];
    header.extend(result.columns.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for c in 0..result.loadings.ncols() {
        let mut row = vec![format!("PC{}", c + 1), result.explained_variance_ratio[c].to_string()];
        row.extend(result.loadings.column(c).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))?;
    let mut s = csv::Writer::from_writer(scores_out);
    let mut header = vec!["meeting_id".to_string()];
    header.extend((1..=result.scores.ncols()).map(|c| format!("PC{c}")));
    s.write_record(&header).map_err(err)?;
    for (i, id) in meeting_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(result.scores.row(i).iter().map(|v| v.to_string()));
        s.write_record(&row).map_err(err)?;
    }
    s.flush().map_err(|e| Error::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_correlated_columns() {
        let data = DMatrix::from_fn(20, 2, |i, j| (i as f64).powi(2) * if j == 0 { 1.0 } else { -3.0 } + 1.0);
        let r = pca(&data, &["a".into(), "b".into()], 1).unwrap();
        assert!((r.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_dropped() {
        let data = DMatrix::from_fn(10, 3, |i, j| if j == 1 { 5.0 } else { (i * (j + 1)) as f64 + (i % 3) as f64 });
        let r = pca(&data, &["a".into(), "b".into(), "c".into()], 2).unwrap();
        assert_eq!(r.dropped, vec!["b".to_string()]);
        assert_eq!(r.columns.len(), 2);
    }
}
