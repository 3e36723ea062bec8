//! Estimators for the regression tables: beta regression, fractional
//! logit, random-intercept beta/probit panels, OLS with robust errors,
//! pseudo-R² and double machine learning.

mod beta;
mod dml;
mod fractional;
mod lasso;
mod linalg;
mod mixed;
mod ols;
mod optim;
mod probit;
mod special;
mod table;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use beta::beta_regression;
pub use dml::{dml_effect, dml_with_folds, DmlResult};
pub use fractional::fractional_logit;
pub use lasso::{lasso, LassoFit};
pub use linalg::check_rank;
pub use mixed::{gauss_hermite, random_intercept, Family, MixedOptions};
pub use ols::ols_robust;
pub use optim::{bfgs, numeric_hessian, BfgsOptions, Minimum};
pub use probit::probit;
pub use special::{ln_normal_cdf, normal_cdf};
pub use table::{stars, write_columns_csv, write_columns_text, write_table_csv, write_table_text, TableColumn};

/// Response vector, design matrix (intercept included as a column) and
/// optional cluster labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    /// Dense cluster index per row, `0..n_clusters`.
    pub cluster: Option<Vec<usize>>,
}

impl Design {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() || names.len() != x.ncols() {
            return Err(Error::Dimension(format!(
                "y has {} rows, X is {}x{}, {} names",
                y.len(),
                x.nrows(),
                x.ncols(),
                names.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite response in row {i}")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite regressor in row {}", i % x.nrows())));
        }
        Ok(Self { y, x, names, cluster: None })
    }

    /// Builds `[1, columns...]` with the intercept named `const`.
    pub fn with_intercept(y: Vec<f64>, columns: &[(&str, Vec<f64>)]) -> Result<Self> {
        let n = y.len();
        if let Some((name, _)) = columns.iter().find(|(_, c)| c.len() != n) {
            return Err(Error::Dimension(format!("column {name} length differs from y ({n})")));
        }
        let x = DMatrix::from_fn(n, columns.len() + 1, |i, j| if j == 0 { 1.0 } else { columns[j - 1].1[i] });
        let mut names = vec!["const".to_string()];
        names.extend(columns.iter().map(|(n, _)| n.to_string()));
        Self::new(DVector::from_vec(y), x, names)
    }

    /// Attaches cluster labels; labels are mapped to dense indices in
    /// order of first appearance.
    pub fn with_clusters<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.y.len() {
            return Err(Error::Dimension(format!("{} cluster labels for {} rows", labels.len(), self.y.len())));
        }
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut order = Vec::new();
        for l in labels {
            let next = index.len();
            order.push(*index.entry(l.as_ref()).or_insert(next));
        }
        self.cluster = Some(order);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_clusters(&self) -> Option<usize> {
        self.cluster.as_ref().map(|c| c.iter().max().map_or(0, |m| m + 1))
    }

    /// Same response and clusters with only an intercept.
    pub fn intercept_only(&self) -> Self {
        Self {
            y: self.y.clone(),
            x: DMatrix::from_element(self.n(), 1, 1.0),
            names: vec!["const".into()],
            cluster: self.cluster.clone(),
        }
    }

    /// Rows ordered as given by `rows`.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
            x: self.x.select_rows(rows),
            names: self.names.clone(),
            cluster: self.cluster.as_ref().map(|c| {
                let mut index = BTreeMap::new();
                rows.iter()
                    .map(|&i| {
                        let next = index.len();
                        *index.entry(c[i]).or_insert(next)
                    })
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeKind {
    /// Inverse observed information.
    Model,
    /// Heteroskedasticity-robust sandwich with n/(n-p) correction.
    Robust,
    /// Cluster-robust sandwich with G/(G-1) correction.
    Cluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: String,
    /// Parameter names; auxiliary parameters (e.g. `ln_phi`) follow the
    /// regression coefficients.
    pub names: Vec<String>,
    pub coef: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub se: DVector<f64>,
    pub se_kind: SeKind,
    /// Log-likelihood (quasi-log-likelihood for the fractional logit).
    pub log_likelihood: f64,
    pub n: usize,
    pub n_clusters: Option<usize>,
    pub observed: DVector<f64>,
    /// Fitted conditional mean per row.
    pub fitted: DVector<f64>,
    pub r2: Option<f64>,
    pub adj_r2: Option<f64>,
    /// Derived quantities such as `phi` or `sigma_u2`.
    pub aux: BTreeMap<String, f64>,
    pub iterations: usize,
    pub notes: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coef[i], self.se[i]))
    }

    pub fn z(&self, i: usize) -> f64 {
        self.coef[i] / self.se[i]
    }

    /// Two-sided normal p-value.
    pub fn p_value(&self, i: usize) -> f64 {
        2.0 * (1.0 - normal_cdf(self.z(i).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoR2 {
    /// `1 - lnL / lnL0`.
    McFadden,
    /// Squared correlation of fitted and observed responses.
    SquaredCorrelation,
}

pub fn pseudo_r2(fit: &FitResult, null: &FitResult, kind: PseudoR2) -> Result<f64> {
    if fit.observed != null.observed {
        return Err(Error::Data("pseudo-R² needs both fits on the same response".into()));
    }
    match kind {
        PseudoR2::McFadden => {
            if null.log_likelihood == 0.0 {
                return Err(Error::Undefined("null log-likelihood is zero".into()));
            }
            Ok(1.0 - fit.log_likelihood / null.log_likelihood)
        }
        PseudoR2::SquaredCorrelation => {
            let r = correlation(fit.fitted.as_slice(), fit.observed.as_slice());
            if r.is_nan() {
                return Err(Error::Undefined("fitted or observed values have no variance".into()));
            }
            Ok(r * r)
        }
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

pub(crate) fn logistic(x: f64) -> f64 {
    crate::tensor::sigmoid(x)
}

