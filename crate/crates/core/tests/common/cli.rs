//! Drives the `hidden-dissent` binary on a small synthetic dataset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hidden_dissent::nn::{HyperConfig, ModelDims};
use hidden_dissent::pipeline::RunConfig;
use hidden_dissent::synthetic::{write_dataset, DatasetSpec};

pub const BIN: &str = env!("CARGO_BIN_EXE_hidden-dissent");

/// Writes the dataset under `dir/data` and a fast config to `dir/config.json`.
/// Events are derived from the minutes model unless `precomputed_events`.
pub fn small_run(dir: &Path, seed: u64, precomputed_events: bool) -> PathBuf {
    let mut data = write_dataset(&dir.join("data"), &DatasetSpec::small(seed)).unwrap();
    if !precomputed_events {
        data.events = None;
    }
    let mut cfg = RunConfig { data, out: dir.join("out"), seed, ..RunConfig::default() };
    cfg.model = ModelDims::with_model_dim(24);
    cfg.hyper = HyperConfig { n_mhsa_chair: 1, n_mhsa_member: 1, heads_chair: 4, heads_member: 4, dropout: 0.4, lr0: 1e-3 };
    cfg.train.max_steps = 40;
    cfg.train.eval_every = 10;
    cfg.minutes.model.n_mhsa = 1;
    cfg.minutes.model.heads = 4;
    cfg.minutes.model.dropout = 0.0;
    cfg.minutes.model.lr0 = 1e-3;
    cfg.minutes.train.max_steps = 30;
    cfg.minutes.train.eval_every = 10;
    cfg.minutes.folds = 3;
    cfg.tune.budget = 2;
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

pub fn run(config: &Path, out: &Path, workers: usize, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .args(args)
        .output()
        .unwrap()
}

pub fn run_ok(config: &Path, out: &Path, workers: usize, args: &[&str]) {
    let o = run(config, out, workers, args);
    assert!(
        o.status.success(),
        "{args:?} failed with {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Every file below `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Runs `train`, `score`, `aggregate`, `train --model minutes`, `tune` and
/// `event-study` into a fresh directory per (label, workers) pair and
/// reports every file that differs from the first run. An empty result means byte-identical output.
pub fn determinism_differences(dir: &Path, seed: u64) -> Vec<String> {
    let config = small_run(dir, seed, false);
    let runs = [("a", 1), ("b", 8), ("c", 8), ("d", 1)];
    let snapshots: Vec<(String, BTreeMap<String, Vec<u8>>)> = runs
        .iter()
        .map(|&(label, workers)| {
            let out = dir.join(label);
            for args in [&["train"][..], &["score"], &["aggregate"], &["train", "--model", "minutes"], &["tune"], &["event-study"]] {
                run_ok(&config, &out, workers, args);
            }
            (format!("{label} (workers {workers})"), snapshot(&out))
        })
        .collect();
    let (base_label, base) = &snapshots[0];
    let mut diffs = Vec::new();
    for (label, snap) in &snapshots[1..] {
        for name in base.keys().chain(snap.keys()).collect::<std::collections::BTreeSet<_>>() {
            if base.get(name) != snap.get(name) {
                diffs.push(format!("{name}: {base_label} vs {label}"));
            }
        }
    }
    if base.len() < 10 {
        diffs.push(format!("only {} files written", base.len()));
    }
    diffs
}
