//! Single-branch regressor that predicts a meeting's hidden-dissent level
//! from its minutes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classifier::sidecar_path;
use super::config::{MinutesConfig, ModelDims};
use super::layers::{encode, head, init_branch, init_head, lookup_branch, lookup_head, BranchIds, HeadIds};
use super::{MinutesExample, Model, Task};
use crate::corpus::EmbeddedTranscript;
use crate::error::{Error, Result};
use crate::tensor::{load_weights, save_weights, ParamSet, Tape, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct MinutesParams {
    params: ParamSet,
    dims: ModelDims,
    config: MinutesConfig,
    branch: BranchIds,
    head: HeadIds,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    architecture: String,
    dims: ModelDims,
    config: MinutesConfig,
}

impl MinutesParams {
    pub fn init(dims: ModelDims, config: MinutesConfig, seed: u64) -> Result<Self> {
        dims.validate()?;
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let branch = init_branch(&mut params, "minutes", dims, config.n_mhsa, config.heads, &mut rng)?;
        let head = init_head(&mut params, dims, &mut rng)?;
        Ok(Self { params, dims, config, branch, head })
    }

    pub fn from_params(mut params: ParamSet, dims: ModelDims, config: MinutesConfig) -> Result<Self> {
        dims.validate()?;
        config.validate()?;
        let branch = lookup_branch(&mut params, "minutes", dims, config.n_mhsa, config.heads)?;
        let head = lookup_head(&mut params, dims)?;
        Ok(Self { params, dims, config, branch, head })
    }

    pub fn config(&self) -> MinutesConfig {
        self.config
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_weights(path, &self.params)?;
        let sidecar = Sidecar {
            architecture: "minutes-regressor".into(),
            dims: self.dims,
            config: self.config,
        };
        let side = sidecar_path(path);
        std::fs::write(&side, serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"))
            .map_err(|e| Error::io(side, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let sidecar: Sidecar = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
        if sidecar.architecture != "minutes-regressor" {
            return Err(Error::Format(format!("{} describes a {}", side.display(), sidecar.architecture)));
        }
        Self::from_params(load_weights(path)?, sidecar.dims, sidecar.config)
    }

    pub fn record<'p, R: Rng + ?Sized>(
        &'p self,
        tape: &mut Tape<'p>,
        doc: &EmbeddedTranscript,
        train: bool,
        rng: &mut R,
    ) -> Result<Var> {
        let p = self.config.dropout;
        let pooled = encode(tape, &self.params, &self.branch, doc, p, train, rng)?;
        let logit = head(tape, &self.params, self.head, pooled, p, train, rng)?;
        Ok(tape.sigmoid(logit))
    }
}

/// Predicted hidden-dissent level of a minutes document, in (0, 1).
pub fn forward_minutes<R: Rng + ?Sized>(
    doc: &EmbeddedTranscript,
    params: &MinutesParams,
    train: bool,
    rng: &mut R,
) -> Result<f64> {
    let mut tape = Tape::new();
    let out = params.record(&mut tape, doc, train, rng)?;
    Ok(probability_from_sigmoid(tape.scalar(out)))
}

fn probability_from_sigmoid(p: f64) -> f64 {
    p.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

impl Model for MinutesParams {
    type Example = MinutesExample;

    const TASK: Task = Task::Regression;

    fn target(ex: &MinutesExample) -> f64 {
        ex.target
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn record_loss<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        ex: &MinutesExample,
        train: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Var, f64)> {
        let out = self.record(tape, &ex.doc, train, rng)?;
        let loss = tape.abs_error(out, ex.target)?;
        Ok((loss, probability_from_sigmoid(tape.scalar(out))))
    }
}
