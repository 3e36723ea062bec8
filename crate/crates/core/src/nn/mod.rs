//! The vote classifier and the minutes regressor as differentiable graphs.
//!
//! Each branch maps sentence embeddings through a dense layer (ReLU), an
//! affine layer norm and dropout, then a stack of post-norm residual
//! attention modules, and mean-pools the populated sentences. The head is
//! `dense(d -> 128), ReLU, dropout, dense(128 -> 1)`.

mod classifier;
mod config;
mod layers;
mod minutes;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

pub use classifier::{forward_classifier, predict_vote, ClassifierParams};
pub use config::{
    on_dropout_grid, HyperConfig, MinutesConfig, ModelDims, DROPOUT_RANGE, DROPOUT_STEP, HEAD_CHOICES,
    LR_RANGE, MODULES_RANGE,
};
pub use minutes::{forward_minutes, MinutesParams};

use crate::corpus::{EmbeddedTranscript, Observation};
use crate::error::Result;
use crate::tensor::{sigmoid, Matrix, ParamSet, Tape, Var};

/// A labeled member/chair transcript pair. `label` is 1 for a NO vote.
#[derive(Debug, Clone)]
pub struct VoteExample {
    pub id: usize,
    pub chair: Arc<EmbeddedTranscript>,
    pub member: Arc<EmbeddedTranscript>,
    pub label: u8,
}

impl From<&Observation> for VoteExample {
    fn from(o: &Observation) -> Self {
        Self {
            id: o.id,
            chair: Arc::clone(&o.chair),
            member: Arc::clone(&o.member),
            label: o.vote.as_label(),
        }
    }
}

/// A minutes document labeled with its meeting's transcript-based dissent level.
#[derive(Debug, Clone)]
pub struct MinutesExample {
    pub id: usize,
    pub doc: Arc<EmbeddedTranscript>,
    pub target: f64,
}

/// Sigmoid kept strictly inside (0, 1).
pub fn probability(logit: f64) -> f64 {
    sigmoid(logit).clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Binary target, cross-entropy loss.
    Classification,
    /// Target in (0, 1), absolute-error loss.
    Regression,
}

/// A trainable network with a per-example loss.
pub trait Model: Clone + Send + Sync {
    type Example: Send + Sync;

    const TASK: Task;

    fn target(ex: &Self::Example) -> f64;

    fn params(&self) -> &ParamSet;

    fn params_mut(&mut self) -> &mut ParamSet;

    /// Records the loss of one example; returns the loss node and the
    /// model's prediction in (0, 1).
    fn record_loss<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        ex: &Self::Example,
        train: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Var, f64)>;
}

/// Loss, prediction and the gradient of every parameter for one example.
pub fn loss_and_grads<M: Model>(
    model: &M,
    ex: &M::Example,
    train: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, Vec<Matrix>)> {
    let mut tape = Tape::new();
    let (loss, pred) = model.record_loss(&mut tape, ex, train, rng)?;
    let grads = tape.backward(loss);
    let mut out = model.params().zeros_like();
    for (id, g) in tape.param_grads(&grads) {
        out[id] += g;
    }
    Ok((tape.scalar(loss), pred, out))
}

/// Loss and prediction without gradients.
pub fn evaluate<M: Model>(model: &M, ex: &M::Example) -> Result<(f64, f64)> {
    let mut tape = Tape::new();
    let mut rng = rand::SeedableRng::seed_from_u64(0);
    let (loss, pred) = model.record_loss(&mut tape, ex, false, &mut rng)?;
    Ok((tape.scalar(loss), pred))
}
