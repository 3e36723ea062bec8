use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::bootstrap::{bca_bootstrap, BootstrapOptions, Interval};
use super::panel::{EventPanel, HORIZONS};
use crate::econ::{ols_robust, Design, FitResult};
use crate::error::{Error, Result};

/// Fewest complete events for a horizon to be estimated.
pub const MIN_EVENTS: usize = 10;

#[derive(Debug, Clone)]
pub struct HorizonFit {
    pub h: usize,
    pub n: usize,
    /// `const`, `hd`, `sentiment`.
    pub design: Design,
    pub fit: FitResult,
}

impl HorizonFit {
    pub fn residuals(&self) -> DVector<f64> {
        &self.fit.observed - &self.fit.fitted
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonBands {
    pub h: usize,
    pub n: usize,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b1_band: Interval,
    pub b2_band: Interval,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionResult {
    pub indicator: String,
    pub horizons: Vec<HorizonBands>,
    /// Complete events per horizon, including skipped ones.
    pub n_by_horizon: Vec<usize>,
    pub notes: Vec<String>,
}

/// One OLS of the outcome on `[1, hd, sentiment]` per horizon, over events
/// whose outcome is present. Horizons with fewer than [`MIN_EVENTS`]
/// complete events are skipped with a note.
pub fn local_projection(panel: &EventPanel, indicator: &str) -> Result<(Vec<HorizonFit>, Vec<usize>, Vec<String>)> {
    let rows = panel
        .outcomes
        .get(indicator)
        .ok_or_else(|| Error::Data(format!("panel has no outcomes for {indicator}")))?;
    let mut fits = Vec::new();
    let mut counts = Vec::with_capacity(HORIZONS);
    let mut notes = Vec::new();
    for h in 0..HORIZONS {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][h].is_some()).collect();
        counts.push(idx.len());
        if idx.len() < MIN_EVENTS {
            notes.push(format!("{indicator} h={h}: skipped, {} complete events", idx.len()));
            continue;
        }
        let y: Vec<f64> = idx.iter().map(|&i| rows[i][h].unwrap_or(f64::NAN)).collect();
        let hd: Vec<f64> = idx.iter().map(|&i| panel.events[i].hd).collect();
        let s: Vec<f64> = idx.iter().map(|&i| panel.events[i].sentiment).collect();
        let design = Design::with_intercept(y, &[("hd", hd), ("sentiment", s)])?;
        let fit = ols_robust(&design)?;
        fits.push(HorizonFit { h, n: idx.len(), design, fit });
    }
    Ok((fits, counts, notes))
}

/// Local projections with BCa bands on the dissent and sentiment
/// coefficients. Horizon `h` bootstraps under stream `h`.
pub fn event_study(panel: &EventPanel, indicator: &str, opts: &BootstrapOptions) -> Result<ProjectionResult> {
    opts.validate()?;
    let (fits, n_by_horizon, mut notes) = local_projection(panel, indicator)?;
    let horizons = fits
        .par_iter()
        .map(|f| {
            let bands = bca_bootstrap(&f.design, &f.fit, opts, f.h as u64)?;
            Ok(HorizonBands {
                h: f.h,
                n: f.n,
                b0: f.fit.coef[0],
                b1: f.fit.coef[1],
                b2: f.fit.coef[2],
                b1_band: bands[1],
                b2_band: bands[2],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for b in &horizons {
        if b.b1_band.degenerate || b.b2_band.degenerate {
            notes.push(format!("{indicator} h={}: degenerate bootstrap distribution", b.h));
        }
    }
    Ok(ProjectionResult { indicator: indicator.to_string(), horizons, n_by_horizon, notes })
}

/// Columns `h,b1,b1_lo,b1_hi,b2,b2_lo,b2_hi,n`; skipped horizons keep
/// their `n` with empty estimates.
pub fn write_projection_csv(path: &Path, result: &ProjectionResult) -> Result<()> {
    let mut out = String::from("h,b1,b1_lo,b1_hi,b2,b2_lo,b2_hi,n\n");
    for h in 0..result.n_by_horizon.len() {
        let n = result.n_by_horizon[h];
        match result.horizons.iter().find(|b| b.h == h) {
            Some(b) => out.push_str(&format!(
                "{h},{},{},{},{},{},{},{n}\n",
                b.b1, b.b1_band.lo, b.b1_band.hi, b.b2, b.b2_band.lo, b.b2_band.hi
            )),
            None => out.push_str(&format!("{h},,,,,,,{n}\n")),
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
