use serde::{Deserialize, Serialize};

use crate::corpus::EMBED_DIM;
use crate::error::{Error, Result};

pub const MODULES_RANGE: (usize, usize) = (1, 12);
pub const HEAD_CHOICES: [usize; 3] = [4, 8, 12];
pub const DROPOUT_RANGE: (f64, f64) = (0.4, 0.8);
pub const DROPOUT_STEP: f64 = 0.005;
pub const LR_RANGE: (f64, f64) = (1e-6, 1e-3);

/// One point of the vote classifier's tuning space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperConfig {
    pub n_mhsa_chair: usize,
    pub n_mhsa_member: usize,
    pub heads_chair: usize,
    pub heads_member: usize,
    pub dropout: f64,
    pub lr0: f64,
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self::selected()
    }
}

impl HyperConfig {
    /// Three modules per branch, eight heads, dropout 0.735, initial rate 4e-5.
    pub fn selected() -> Self {
        Self {
            n_mhsa_chair: 3,
            n_mhsa_member: 3,
            heads_chair: 8,
            heads_member: 8,
            dropout: 0.735,
            lr0: 4.0e-5,
        }
    }

    /// Checks every field against the tuning-space bounds.
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_mhsa_chair", self.n_mhsa_chair), ("n_mhsa_member", self.n_mhsa_member)] {
            if !(MODULES_RANGE.0..=MODULES_RANGE.1).contains(&n) {
                return Err(Error::Config(format!("{name} = {n} outside [1, 12]")));
            }
        }
        for (name, h) in [("heads_chair", self.heads_chair), ("heads_member", self.heads_member)] {
            if !HEAD_CHOICES.contains(&h) {
                return Err(Error::Config(format!("{name} = {h} not in {{4, 8, 12}}")));
            }
        }
        if !on_dropout_grid(self.dropout) {
            return Err(Error::Config(format!(
                "dropout = {} is not on the 0.005 grid over [0.4, 0.8]",
                self.dropout
            )));
        }
        if !(self.lr0 >= LR_RANGE.0 * (1.0 - 1e-12) && self.lr0 <= LR_RANGE.1 * (1.0 + 1e-12)) {
            return Err(Error::Config(format!("lr0 = {} outside [1e-6, 1e-3]", self.lr0)));
        }
        Ok(())
    }
}

pub fn on_dropout_grid(p: f64) -> bool {
    let k = (p - DROPOUT_RANGE.0) / DROPOUT_STEP;
    (DROPOUT_RANGE.0 - 1e-12..=DROPOUT_RANGE.1 + 1e-12).contains(&p) && (k - k.round()).abs() < 1e-6
}

/// Layer widths. The input width is the sentence-embedding width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelDims {
    pub input_dim: usize,
    /// Width of the branch dense layer and every attention module.
    pub model_dim: usize,
    /// Hidden width of the classification/regression head.
    pub head_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            input_dim: EMBED_DIM,
            model_dim: EMBED_DIM,
            head_hidden: 128,
        }
    }
}

impl ModelDims {
    pub fn with_model_dim(model_dim: usize) -> Self {
        Self {
            model_dim,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim != EMBED_DIM {
            return Err(Error::Config(format!(
                "input width {} must equal the embedding width {EMBED_DIM}",
                self.input_dim
            )));
        }
        if self.model_dim == 0 || self.head_hidden == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// Configuration of the single-branch minutes regressor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinutesConfig {
    pub n_mhsa: usize,
    pub heads: usize,
    pub dropout: f64,
    pub lr0: f64,
}

impl Default for MinutesConfig {
    /// Six modules of four heads, dropout 0.46, initial rate 4.57e-5.
    fn default() -> Self {
        Self {
            n_mhsa: 6,
            heads: 4,
            dropout: 0.46,
            lr0: 4.57e-5,
        }
    }
}

impl MinutesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mhsa == 0 {
            return Err(Error::Config("minutes model needs at least one attention module".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!("invalid lr0 {}", self.lr0)));
        }
        Ok(())
    }
}
