mod common;

use std::collections::BTreeMap;
use std::process::Command;

use common::cli::{run, run_ok, small_run, BIN};
use hidden_dissent::corpus::{join_panel, load_embeddings, load_profiles, load_votes};
use hidden_dissent::dissent::read_panel_csv;
use hidden_dissent::nn::ClassifierParams;
use hidden_dissent::pipeline::RunConfig;
use serde_json::Value;

fn json(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn train_tune_and_event_study_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let diffs = common::cli::determinism_differences(dir.path(), 7);
    assert!(diffs.is_empty(), "{diffs:#?}");
}

#[test]
fn full_chain_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path(), 3, true);
    let out = dir.path().join("out");
    for args in [
        &["ingest-check"][..],
        &["train"],
        &["score"],
        &["aggregate"],
        &["analyze-panel"],
        &["analyze-sep"],
        &["analyze-opp"],
        &["event-study"],
        &["report"],
    ] {
        run_ok(&config, &out, 2, args);
    }

    let ingest = json(&out.join("ingest_report.json"));
    assert_eq!(ingest["failures"], 0);
    assert_eq!(ingest["join"]["observations"], 300);

    // scores recomputed with the straight-line forward
    let cfg: RunConfig = serde_json::from_value(json(&config)).unwrap();
    let model = ClassifierParams::load(&out.join("model.fwts")).unwrap();
    let heads = (model.hyper().heads_chair, model.hyper().heads_member);
    let joined = join_panel(
        &load_votes(cfg.data.votes.as_ref().unwrap()).unwrap(),
        &load_profiles(cfg.data.profiles.as_ref().unwrap()).unwrap(),
        load_embeddings(cfg.data.embeddings.as_ref().unwrap()).unwrap(),
    );
    let expected: BTreeMap<(String, String), f64> = joined
        .observations
        .iter()
        .map(|o| {
            let p = common::naive_classifier_probability(model.params(), heads, &o.chair, &o.member);
            ((o.meeting_id.clone(), o.member_id.clone()), p)
        })
        .collect();
    let scored = read_panel_csv(std::fs::File::open(out.join("panel.csv")).unwrap()).unwrap();
    assert_eq!(scored.len(), expected.len());
    for o in &scored {
        let want = expected[&(o.meeting_id.clone(), o.member_id.clone())];
        assert!((o.hd - want).abs() <= 1e-10, "{}/{}: {} vs {want}", o.meeting_id, o.member_id, o.hd);
    }

    let pca = json(&out.join("sep_pca.json"));
    for block in ["policy", "economy"] {
        let ratios = pca[block]["explained_variance_ratio"].as_array().unwrap();
        assert!(!ratios.is_empty(), "{block}: {pca}");
        let total: f64 = ratios.iter().map(|r| r.as_f64().unwrap()).sum();
        assert!(total > 0.0 && total <= 1.0 + 1e-12);
    }
    assert_eq!(pca["economy"]["explained_variance_ratio"].as_array().unwrap().len(), 3);

    for f in [
        "summary.csv",
        "covariates.csv",
        "panel_member.txt",
        "panel_meeting.txt",
        "sep_regressions.txt",
        "opp_regressions.txt",
        "event_study_SPY.csv",
        "report/index.json",
        "report/summary.csv",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest = json(&out.join("manifest-score.json"));
    let inputs: Vec<&str> = manifest["inputs"].as_array().unwrap().iter().map(|i| i["path"].as_str().unwrap()).collect();
    assert!(inputs.contains(&"model.fwts"), "{inputs:?}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = Command::new(BIN).args(["train", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{"train": {"max_stepz": 3}}"#).unwrap();
    let o = run(&path, dir.path(), 1, &["train"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_workers_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path(), 1, true);
    assert_eq!(run(&config, &dir.path().join("out"), 0, &["aggregate"]).status.code(), Some(2));
}

#[test]
fn malformed_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path(), 2, true);
    let cfg: RunConfig = serde_json::from_value(json(&config)).unwrap();
    let votes = cfg.data.votes.unwrap();
    let text = std::fs::read_to_string(&votes).unwrap().replacen(",YES,", ",PERHAPS,", 1);
    std::fs::write(&votes, text).unwrap();
    let out = dir.path().join("out");
    let o = run(&config, &out, 1, &["ingest-check"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("ingest_report.json"));
    assert!(report["failures"].as_u64().unwrap() >= 1);
    assert_eq!(run(&config, &out, 1, &["train"]).status.code(), Some(3));
}

#[test]
fn corrupt_embedding_file_fails_ingest_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path(), 2, true);
    let bad = dir.path().join("bad.femb");
    std::fs::write(&bad, b"FEMB0002\0\0\0\0").unwrap();
    let o = run(&config, &dir.path().join("out"), 1, &["ingest-check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn environment_overrides_sit_between_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path(), 4, true);
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .env("HIDDEN_DISSENT__SEED", "99")
        .env("HIDDEN_DISSENT__TUNE__BUDGET", "1")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("tune")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let m = json(&out.join("manifest-tune.json"));
    assert_eq!(m["config"]["seed"], 99);
    assert_eq!(m["config"]["tune"]["budget"], 1);
    assert_eq!(json(&out.join("tune_trials.json")).as_array().map(Vec::len), Some(1));

    let status = Command::new(BIN)
        .env("HIDDEN_DISSENT__SEED", "99")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "5", "tune", "--budget", "1"])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_eq!(json(&out.join("manifest-tune.json"))["config"]["seed"], 5);
}

#[test]
fn tune_with_fixed_seed_repeats_its_trials() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_run(dir.path(), 7, true);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&config, &a, 2, &["--seed", "7", "tune", "--budget", "1"]);
    run_ok(&config, &b, 3, &["--seed", "7", "tune", "--budget", "1"]);
    assert_eq!(std::fs::read(a.join("tune_trials.json")).unwrap(), std::fs::read(b.join("tune_trials.json")).unwrap());
}
