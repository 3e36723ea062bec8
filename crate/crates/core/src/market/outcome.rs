use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::PriceSeries;
use crate::error::{Error, Result};

/// `ln close[t+h] - ln open[t]`, where `t` is the first trading day on or
/// after `date` and `h` counts trading days. `None` when either bar is absent.
pub fn log_return(series: &PriceSeries, date: NaiveDate, h: usize) -> Option<f64> {
    let t = series.index_on_or_after(date)?;
    let end = series.observations.get(t + h)?;
    Some(end.close.ln() - series.observations[t].open.ln())
}

/// Difference of the two legs' log returns.
pub fn spread_outcome(a: &PriceSeries, b: &PriceSeries, date: NaiveDate, h: usize) -> Option<f64> {
    Some(log_return(a, date, h)? - log_return(b, date, h)?)
}

/// A single price series or a long-short spread, written `A` or `A-B`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Indicator {
    Single(String),
    Spread(String, String),
}

impl Indicator {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').map(str::trim).collect();
        match parts.as_slice() {
            [a] if !a.is_empty() => Ok(Indicator::Single(a.to_string())),
            [a, b] if !a.is_empty() && !b.is_empty() => Ok(Indicator::Spread(a.to_string(), b.to_string())),
            _ => Err(Error::Config(format!("bad indicator {s:?}; expected SYMBOL or SYMBOL-SYMBOL"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Indicator::Single(a) => a.clone(),
            Indicator::Spread(a, b) => format!("{a}-{b}"),
        }
    }

    /// The full indicator set: eight series plus the inflation-expectation
    /// and interest-rate-risk spreads.
    pub fn default_set() -> Vec<Self> {
        ["SPY", "VIX", "GOVT", "TIP", "LQD", "LQDH", "JPY", "EUR", "GOVT-TIP", "LQD-LQDH"]
            .iter()
            .map(|s| Self::parse(s).expect("static indicator"))
            .collect()
    }

    fn symbols(&self) -> Vec<&str> {
        match self {
            Indicator::Single(a) => vec![a],
            Indicator::Spread(a, b) => vec![a, b],
        }
    }

    /// Outcome for one event and horizon.
    pub fn outcome(&self, prices: &BTreeMap<String, PriceSeries>, date: NaiveDate, h: usize) -> Option<f64> {
        match self {
            Indicator::Single(a) => log_return(prices.get(a)?, date, h),
            Indicator::Spread(a, b) => spread_outcome(prices.get(a)?, prices.get(b)?, date, h),
        }
    }

    pub fn missing_symbols(&self, prices: &BTreeMap<String, PriceSeries>) -> Vec<String> {
        self.symbols().into_iter().filter(|s| !prices.contains_key(*s)).map(String::from).collect()
    }
}

/// Mean of a set of vectors of equal length.
pub fn centroid(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or_else(|| Error::Data("centroid of no vectors".into()))?;
    let d = first.len();
    let mut c = vec![0.0; d];
    for v in vectors {
        if v.len() != d {
            return Err(Error::Dimension(format!("vector of length {} among length {d}", v.len())));
        }
        for (a, b) in c.iter_mut().zip(v) {
            *a += b;
        }
    }
    let k = vectors.len() as f64;
    c.iter_mut().for_each(|a| *a /= k);
    Ok(c)
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("lengths {} and {}", a.len(), b.len())));
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// Dove-minus-hawk cosine score, clipped to [-1, 1]; higher is more dovish.
pub fn sentiment_axis(doc: &[f64], dove: &[f64], hawk: &[f64]) -> Result<f64> {
    Ok((cosine(doc, dove)? - cosine(doc, hawk)?).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PriceBar;

    fn series(bars: &[(u32, f64, f64)]) -> PriceSeries {
        let obs = bars
            .iter()
            .map(|&(d, open, close)| PriceBar { date: NaiveDate::from_ymd_opt(2020, 1, d).unwrap(), open, close })
            .collect();
        PriceSeries::new("X", obs).unwrap()
    }

    #[test]
    fn returns_and_spreads() {
        let s = series(&[(2, 100.0, 100.0), (3, 100.0, 101.0), (6, 101.0, 99.0)]);
        let d = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
        assert_eq!(log_return(&s, d, 0), Some(0.0));
        assert!((log_return(&s, d, 1).unwrap() - 0.00995).abs() < 1e-5);
        assert_eq!(log_return(&s, d, 3), None);
        // a weekend date maps to the next trading day
        let sat = NaiveDate::from_ymd_opt(2020, 1, 4).unwrap();
        assert!((log_return(&s, sat, 0).unwrap() - (99f64 / 101.0).ln()).abs() < 1e-15);
        let flat = series(&[(2, 100.0, 100.0), (3, 100.0, 100.0), (6, 100.0, 100.0)]);
        assert!((spread_outcome(&s, &flat, d, 1).unwrap() - 0.00995).abs() < 1e-5);
        assert_eq!(spread_outcome(&s, &flat, d, 1), spread_outcome(&flat, &s, d, 1).map(|v| -v));
        assert_eq!(spread_outcome(&s, &s, d, 2), Some(0.0));
    }

    #[test]
    fn indicator_names_round_trip() {
        for ind in Indicator::default_set() {
            assert_eq!(Indicator::parse(&ind.name()).unwrap(), ind);
        }
        assert!(Indicator::parse("A-B-C").is_err());
    }

    #[test]
    fn sentiment_cases() {
        let dove = [1.0, 0.0, 0.0];
        let hawk = [0.0, 1.0, 0.0];
        assert!((sentiment_axis(&dove, &dove, &hawk).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(sentiment_axis(&[0.0, 0.0, 2.0], &dove, &hawk).unwrap(), 0.0);
        let doc = [0.3, -0.2, 0.9];
        assert_eq!(sentiment_axis(&doc, &dove, &hawk).unwrap(), -sentiment_axis(&doc, &hawk, &dove).unwrap());
        assert!(matches!(sentiment_axis(&[0.0; 3], &dove, &hawk), Err(Error::ZeroNorm)));
    }
}
