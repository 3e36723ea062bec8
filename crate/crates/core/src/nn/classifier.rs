//! Dual-branch vote classifier.
//!
//! Chair and member transcripts pass through separate encoders; the head
//! reads the difference of the pooled vectors (member minus chair).

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{HyperConfig, ModelDims};
use super::layers::{encode, head, init_branch, init_head, lookup_branch, lookup_head, BranchIds, HeadIds};
use super::{probability, Model, Task, VoteExample};
use crate::corpus::EmbeddedTranscript;
use crate::error::{Error, Result};
use crate::tensor::{load_weights, save_weights, Matrix, ParamSet, Tape, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    params: ParamSet,
    dims: ModelDims,
    hyper: HyperConfig,
    chair: BranchIds,
    member: BranchIds,
    head: HeadIds,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    architecture: String,
    dims: ModelDims,
    hyper: HyperConfig,
}

impl ClassifierParams {
    pub fn init(dims: ModelDims, hyper: HyperConfig, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let chair = init_branch(&mut params, "chair", dims, hyper.n_mhsa_chair, hyper.heads_chair, &mut rng)?;
        let member = init_branch(&mut params, "member", dims, hyper.n_mhsa_member, hyper.heads_member, &mut rng)?;
        let head = init_head(&mut params, dims, &mut rng)?;
        Ok(Self { params, dims, hyper, chair, member, head })
    }

    /// Rebuilds the model from a weight set with the expected names and shapes.
    pub fn from_params(mut params: ParamSet, dims: ModelDims, hyper: HyperConfig) -> Result<Self> {
        dims.validate()?;
        let chair = lookup_branch(&mut params, "chair", dims, hyper.n_mhsa_chair, hyper.heads_chair)?;
        let member = lookup_branch(&mut params, "member", dims, hyper.n_mhsa_member, hyper.heads_member)?;
        let head = lookup_head(&mut params, dims)?;
        Ok(Self { params, dims, hyper, chair, member, head })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn hyper(&self) -> HyperConfig {
        self.hyper
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Copies the chair encoder's weights into the member encoder. Both
    /// branches must have the same depth and head count.
    pub fn tie_branches(&mut self) -> Result<()> {
        if self.hyper.n_mhsa_chair != self.hyper.n_mhsa_member || self.hyper.heads_chair != self.hyper.heads_member {
            return Err(Error::Config("branches differ in depth or heads".into()));
        }
        let pairs: Vec<(usize, usize)> = (0..self.params.len())
            .filter_map(|id| {
                let name = self.params.name(id);
                let twin = name.strip_prefix("chair.")?;
                Some((id, self.params.id(&format!("member.{twin}"))?))
            })
            .collect();
        for (src, dst) in pairs {
            let v = self.params.get(src).clone();
            self.params.get_mut(dst).copy_from(&v);
        }
        Ok(())
    }

    /// Writes the weights and a JSON sidecar (`<path>.json`) with the layout.
    pub fn save(&self, path: &Path) -> Result<()> {
        save_weights(path, &self.params)?;
        let sidecar = Sidecar {
            architecture: "vote-classifier".into(),
            dims: self.dims,
            hyper: self.hyper,
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        let side = sidecar_path(path);
        std::fs::write(&side, json).map_err(|e| Error::io(side, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let sidecar: Sidecar = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
        if sidecar.architecture != "vote-classifier" {
            return Err(Error::Format(format!("{} describes a {}", side.display(), sidecar.architecture)));
        }
        Self::from_params(load_weights(path)?, sidecar.dims, sidecar.hyper)
    }

    /// Records the forward pass and returns `(logit, member - chair)`.
    pub fn record<'p, R: Rng + ?Sized>(
        &'p self,
        tape: &mut Tape<'p>,
        chair: &EmbeddedTranscript,
        member: &EmbeddedTranscript,
        train: bool,
        rng: &mut R,
    ) -> Result<(Var, Var)> {
        let p = self.hyper.dropout;
        let c = encode(tape, &self.params, &self.chair, chair, p, train, rng)?;
        let m = encode(tape, &self.params, &self.member, member, p, train, rng)?;
        let diff = tape.sub(m, c)?;
        let logit = head(tape, &self.params, self.head, diff, p, train, rng)?;
        Ok((logit, diff))
    }

    /// Pooled member representation minus pooled chair representation (eval mode).
    pub fn branch_difference(&self, chair: &EmbeddedTranscript, member: &EmbeddedTranscript) -> Result<Matrix> {
        let mut tape = Tape::new();
        let (_, diff) = self.record(&mut tape, chair, member, false, &mut ChaCha8Rng::seed_from_u64(0))?;
        Ok(tape.value(diff).clone())
    }

    pub fn logit(&self, chair: &EmbeddedTranscript, member: &EmbeddedTranscript) -> Result<f64> {
        let mut tape = Tape::new();
        let (logit, _) = self.record(&mut tape, chair, member, false, &mut ChaCha8Rng::seed_from_u64(0))?;
        Ok(tape.scalar(logit))
    }
}

pub(crate) fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Probability that `member` votes NO given the chair's transcript.
///
/// With `train` set, dropout masks are drawn from `rng`.
pub fn forward_classifier<R: Rng + ?Sized>(
    chair: &EmbeddedTranscript,
    member: &EmbeddedTranscript,
    params: &ClassifierParams,
    train: bool,
    rng: &mut R,
) -> Result<f64> {
    let mut tape = Tape::new();
    let (logit, _) = params.record(&mut tape, chair, member, train, rng)?;
    Ok(probability(tape.scalar(logit)))
}

/// Rounds a probability to a vote: 1 (NO) iff `p >= 0.5`.
pub fn predict_vote(p: f64) -> u8 {
    u8::from(p >= 0.5)
}

impl Model for ClassifierParams {
    type Example = VoteExample;

    const TASK: Task = Task::Classification;

    fn target(ex: &VoteExample) -> f64 {
        f64::from(ex.label)
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
        ex: &VoteExample,
        train: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Var, f64)> {
        let (logit, _) = self.record(tape, &ex.chair, &ex.member, train, rng)?;
        let loss = tape.bce_with_logits(logit, f64::from(ex.label))?;
        Ok((loss, probability(tape.scalar(logit))))
    }
}
