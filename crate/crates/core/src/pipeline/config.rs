use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::covariates::Center;
use crate::error::{Error, Result};
use crate::market::{BootstrapMode, Indicator};
use crate::nn::{HyperConfig, MinutesConfig, ModelDims};
use crate::train::TrainConfig;

/// Prefix of environment variables that override config fields. Nested
/// fields are separated by double underscores, e.g.
/// `HIDDEN_DISSENT__TRAIN__MAX_STEPS=200`.
pub const ENV_PREFIX: &str = "HIDDEN_DISSENT__";

/// Input files. Trained artifacts default to files in the output directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub embeddings: Option<PathBuf>,
    pub votes: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub tealbook: Option<PathBuf>,
    pub sep: Option<PathBuf>,
    pub opp: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub minutes_embeddings: Option<PathBuf>,
    pub minutes_releases: Option<PathBuf>,
    /// Seed-term embeddings; records with member id `dove` and `hawk`.
    pub sentiment_axis: Option<PathBuf>,
    /// Precomputed release events (`date,hd,sentiment`); when absent they
    /// are derived from the minutes model and the sentiment axis.
    pub events: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub minutes_checkpoint: Option<PathBuf>,
    pub panel: Option<PathBuf>,
    pub meetings: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSettings {
    pub budget: usize,
}

impl Default for TuneSettings {
    fn default() -> Self {
        Self { budget: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinutesSettings {
    pub model: MinutesConfig,
    pub folds: usize,
    pub train: TrainConfig,
}

impl Default for MinutesSettings {
    fn default() -> Self {
        Self { model: MinutesConfig::default(), folds: 5, train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSettings {
    pub quadrature_nodes: usize,
}

impl Default for PanelSettings {
    fn default() -> Self {
        Self { quadrature_nodes: 15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SepSettings {
    pub center: Center,
    pub policy_components: usize,
    pub economy_components: usize,
    pub dml_lambda: f64,
    pub dml_folds: usize,
}

impl Default for SepSettings {
    fn default() -> Self {
        Self { center: Center::Median, policy_components: 2, economy_components: 3, dml_lambda: 1.0, dml_folds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventSettings {
    /// Symbols or `A-B` spreads.
    pub indicators: Vec<String>,
    pub replicates: usize,
    pub level: f64,
    pub mode: BootstrapMode,
}

impl Default for EventSettings {
    fn default() -> Self {
        Self {
            indicators: Indicator::default_set().iter().map(Indicator::name).collect(),
            replicates: 999,
            level: 0.90,
            mode: BootstrapMode::Residual,
        }
    }
}

/// Everything a run depends on. `train.seed` and `minutes.train.seed` are
/// replaced by streams derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataPaths,
    pub model: ModelDims,
    pub hyper: HyperConfig,
    pub train: TrainConfig,
    pub tune: TuneSettings,
    pub minutes: MinutesSettings,
    pub panel: PanelSettings,
    pub sep: SepSettings,
    pub event_study: EventSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataPaths::default(),
            model: ModelDims::default(),
            hyper: HyperConfig::selected(),
            train: TrainConfig::default(),
            tune: TuneSettings::default(),
            minutes: MinutesSettings::default(),
            panel: PanelSettings::default(),
            sep: SepSettings::default(),
            event_study: EventSettings::default(),
        }
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut node = root;
    for (i, key) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("{}: parent is not an object", path[..i].join("."))))?;
        if i + 1 == path.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        node = obj.entry(key.clone()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

impl RunConfig {
    /// Reads the JSON config (if any), applies `HIDDEN_DISSENT__*`
    /// overrides from `env`, and validates the result.
    pub fn resolve<I>(path: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        let mut overrides: Vec<(String, String)> =
            env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        for (k, v) in overrides {
            let keys: Vec<String> = k[ENV_PREFIX.len()..].split("__").map(str::to_ascii_lowercase).collect();
            if keys.iter().any(String::is_empty) {
                return Err(Error::Config(format!("malformed override {k}")));
            }
            set_path(&mut root, &keys, parse_value(&v))?;
        }
        let cfg: RunConfig = serde_json::from_value(root).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.hyper.validate()?;
        self.train.validate()?;
        self.minutes.model.validate()?;
        self.minutes.train.validate()?;
        if self.minutes.folds < 2 {
            return Err(Error::Config("minutes.folds must be at least 2".into()));
        }
        if self.tune.budget == 0 {
            return Err(Error::Config("tune.budget must be at least 1".into()));
        }
        if self.panel.quadrature_nodes < 3 {
            return Err(Error::Config("panel.quadrature_nodes must be at least 3".into()));
        }
        if self.sep.policy_components == 0 || self.sep.economy_components == 0 {
            return Err(Error::Config("sep components must be positive".into()));
        }
        if !(self.sep.dml_lambda >= 0.0) {
            return Err(Error::Config("sep.dml_lambda must be non-negative".into()));
        }
        if self.sep.dml_folds < 2 {
            return Err(Error::Config("sep.dml_folds must be at least 2".into()));
        }
        for ind in &self.event_study.indicators {
            Indicator::parse(ind)?;
        }
        self.bootstrap(0).validate()
    }

    pub fn bootstrap(&self, seed: u64) -> crate::market::BootstrapOptions {
        crate::market::BootstrapOptions {
            replicates: self.event_study.replicates,
            level: self.event_study.level,
            mode: self.event_study.mode,
            seed,
        }
    }

    pub fn require<'a>(&self, field: &str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
        value.as_deref().ok_or_else(|| Error::Config(format!("data.{field} is required for this command")))
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.data.checkpoint.clone().unwrap_or_else(|| self.out.join("model.fwts"))
    }

    pub fn minutes_checkpoint(&self) -> PathBuf {
        self.data.minutes_checkpoint.clone().unwrap_or_else(|| self.out.join("minutes_model.fwts"))
    }

    pub fn panel_path(&self) -> PathBuf {
        self.data.panel.clone().unwrap_or_else(|| self.out.join("panel.csv"))
    }

    pub fn meetings_path(&self) -> PathBuf {
        self.data.meetings.clone().unwrap_or_else(|| self.out.join("meetings.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::resolve(None, Vec::new()).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn env_overrides_nested_fields() {
        let cfg = RunConfig::resolve(
            None,
            env(&[
                ("HIDDEN_DISSENT__TRAIN__MAX_STEPS", "40"),
                ("HIDDEN_DISSENT__DATA__VOTES", "v.csv"),
                ("HIDDEN_DISSENT__SEP__CENTER", "mean"),
                ("UNRELATED", "1"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.train.max_steps, 40);
        assert_eq!(cfg.data.votes, Some(PathBuf::from("v.csv")));
        assert_eq!(cfg.sep.center, Center::Mean);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = RunConfig::resolve(None, env(&[("HIDDEN_DISSENT__TRAIN__MAX_STEP", "40")])).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("max_step")), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::resolve(None, env(&[("HIDDEN_DISSENT__PANEL__QUADRATURE_NODES", "2")])).is_err());
        assert!(RunConfig::resolve(None, env(&[("HIDDEN_DISSENT__EVENT_STUDY__REPLICATES", "100")])).is_err());
        assert!(RunConfig::resolve(None, env(&[("HIDDEN_DISSENT__HYPER__HEADS_CHAIR", "5")])).is_err());
    }
}
