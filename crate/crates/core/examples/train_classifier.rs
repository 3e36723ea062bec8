//! Trains a small vote classifier on synthetic transcripts and reports
//! held-out accuracy.

use hidden_dissent::corpus::join_panel;
use hidden_dissent::nn::{ClassifierParams, HyperConfig, ModelDims, VoteExample};
use hidden_dissent::synthetic::{transcripts, vote_history, TranscriptSpec, VoteSpec};
use hidden_dissent::train::{evaluate_set, split_and_oversample, train_model, TrainConfig};

fn main() -> hidden_dissent::Result<()> {
    let seed = 4;
    let (meetings, profiles) = vote_history(&VoteSpec::small(80, 6, 60, seed))?;
    let docs = transcripts(&meetings, &TranscriptSpec { signal: 0.8, seed, ..TranscriptSpec::default() }, &[])?;
    let panel = join_panel(&meetings, &profiles, docs);
    let examples: Vec<VoteExample> = panel.observations.iter().map(VoteExample::from).collect();
    let split = split_and_oversample(&examples, 0.8, seed)?;

    let hyper = HyperConfig { n_mhsa_chair: 1, n_mhsa_member: 1, heads_chair: 4, heads_member: 4, dropout: 0.2, lr0: 1e-3 };
    let model = ClassifierParams::init(ModelDims::with_model_dim(32), hyper, seed)?;
    let cfg = TrainConfig { max_steps: 300, eval_every: 20, seed, ..TrainConfig::default() };
    let out = train_model(model, &split.train, &split.test, &cfg, hyper.lr0)?;

    let m = evaluate_set(&out.model, &split.test_original)?;
    println!("{} observations, {} steps, best at step {}", examples.len(), out.steps_run, out.best_step);
    println!("test accuracy {:.3}, balanced {:.3}, loss {:.4}", m.accuracy, m.balanced_accuracy, m.loss);
    Ok(())
}
