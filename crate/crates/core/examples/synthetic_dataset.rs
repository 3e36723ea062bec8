//! Writes a complete synthetic input set and a small-model run config.
//!
//! ```text
//! cargo run --example synthetic_dataset -- /tmp/hd
//! cargo run --bin hidden-dissent -- --config /tmp/hd/config.json train
//! ```

use std::path::PathBuf;

use hidden_dissent::nn::{HyperConfig, ModelDims};
use hidden_dissent::pipeline::RunConfig;
use hidden_dissent::synthetic::{write_dataset, DatasetSpec};

fn main() -> hidden_dissent::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic".into()));
    let data = write_dataset(&dir, &DatasetSpec::small(7))?;
    let mut cfg = RunConfig { data, out: dir.join("out"), seed: 7, ..RunConfig::default() };
    cfg.model = ModelDims::with_model_dim(24);
    cfg.hyper = HyperConfig { n_mhsa_chair: 1, n_mhsa_member: 1, heads_chair: 4, heads_member: 4, dropout: 0.4, lr0: 1e-3 };
    cfg.train.max_steps = 150;
    cfg.train.eval_every = 10;
    cfg.minutes.model.n_mhsa = 1;
    cfg.minutes.model.dropout = 0.0;
    cfg.minutes.model.lr0 = 1e-3;
    cfg.minutes.train.max_steps = 100;
    cfg.minutes.train.eval_every = 10;
    cfg.minutes.folds = 3;
    cfg.tune.budget = 2;
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).expect("config serializes")).expect("write config");
    println!("{}", path.display());
    Ok(())
}
