use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::outcome::Indicator;
use crate::corpus::PriceSeries;
use crate::error::{Error, Result};

/// Horizons `0..=15` trading days after the release.
pub const HORIZONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub date: NaiveDate,
    /// Predicted hidden dissent from the minutes.
    pub hd: f64,
    /// Dove-minus-hawk sentiment of the minutes.
    pub sentiment: f64,
}

/// Reads `date,hd,sentiment` rows.
pub fn load_events(path: &std::path::Path) -> Result<Vec<Event>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Data(format!("{}: row {}: {e}", path.display(), i + 2))))
        .collect()
}

/// Events sorted by date, with one outcome row per event for each
/// indicator (`None` where price data is missing).
#[derive(Debug, Clone, PartialEq)]
pub struct EventPanel {
    pub events: Vec<Event>,
    pub outcomes: BTreeMap<String, Vec<[Option<f64>; HORIZONS]>>,
}

impl EventPanel {
    pub fn new(mut events: Vec<Event>) -> Result<Self> {
        events.sort_by(|a, b| a.date.cmp(&b.date).then(a.hd.total_cmp(&b.hd)));
        if let Some(e) = events.iter().find(|e| !(e.hd.is_finite() && e.sentiment.is_finite())) {
            return Err(Error::Data(format!("non-finite event regressor on {}", e.date)));
        }
        Ok(Self { events, outcomes: BTreeMap::new() })
    }

    /// Computes outcomes for `indicator` from price series.
    pub fn add_indicator(&mut self, indicator: &Indicator, prices: &BTreeMap<String, PriceSeries>) -> Result<()> {
        let missing = indicator.missing_symbols(prices);
        if !missing.is_empty() {
            return Err(Error::Data(format!("no price series for {}", missing.join(", "))));
        }
        let rows = self
            .events
            .iter()
            .map(|e| std::array::from_fn(|h| indicator.outcome(prices, e.date, h)))
            .collect();
        self.outcomes.insert(indicator.name(), rows);
        Ok(())
    }

    /// Installs precomputed outcomes (rows aligned with `events`).
    pub fn set_outcomes(&mut self, name: &str, rows: Vec<[Option<f64>; HORIZONS]>) -> Result<()> {
        if rows.len() != self.events.len() {
            return Err(Error::Dimension(format!("{} outcome rows for {} events", rows.len(), self.events.len())));
        }
        self.outcomes.insert(name.to_string(), rows);
        Ok(())
    }
}
