use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::analysis;
use super::config::RunConfig;
use super::manifest::{hash_file, write_manifest, FileHash};
use crate::corpus::{
    join_panel, load_embeddings, load_minutes_releases, load_opp, load_prices, load_profiles, load_sep,
    load_tealbook, load_votes, EmbeddedTranscript, JoinedPanel, Lexicon, JoinWarning, Vote,
};
use crate::dissent::{
    aggregate_panel, read_meetings_csv, read_panel_csv, score_panel, summary_table, write_meetings_csv,
    write_panel_csv, write_summary_csv,
};
use crate::error::{Error, Result};
use crate::market::{
    centroid, event_study, load_events, sentiment_axis, write_projection_csv, Event, EventPanel, Indicator,
};
use crate::nn::{forward_minutes, ClassifierParams, MinutesExample, MinutesParams, VoteExample};
use crate::seed;
use crate::train::{
    evaluate_set, hyper_search, kfold_cv, split_and_oversample, train_model, write_trace_csv, BalancedSplit,
    TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    Vote,
    Minutes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Validates every configured input plus any extra embedding files.
    IngestCheck { extra: Vec<PathBuf> },
    Train { model: ModelKind },
    Tune,
    Score,
    Aggregate,
    AnalyzePanel,
    AnalyzeSep,
    AnalyzeOpp,
    EventStudy,
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::IngestCheck { .. } => "ingest-check",
            Command::Train { model: ModelKind::Vote } => "train",
            Command::Train { model: ModelKind::Minutes } => "train-minutes",
            Command::Tune => "tune",
            Command::Score => "score",
            Command::Aggregate => "aggregate",
            Command::AnalyzePanel => "analyze-panel",
            Command::AnalyzeSep => "analyze-sep",
            Command::AnalyzeOpp => "analyze-opp",
            Command::EventStudy => "event-study",
            Command::Report => "report",
        }
    }
}

/// Files read and written by one command.
pub(crate) struct Run<'a> {
    pub cfg: &'a RunConfig,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
        Ok(Self { cfg, inputs: Vec::new(), outputs: Vec::new() })
    }

    /// A required input path from `data.<field>`.
    pub fn input(&mut self, field: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        let p = self.cfg.require(field, value)?.to_path_buf();
        self.inputs.push(p.clone());
        Ok(p)
    }

    pub fn input_path(&mut self, p: PathBuf) -> PathBuf {
        self.inputs.push(p.clone());
        p
    }

    pub fn output(&mut self, name: &str) -> PathBuf {
        let p = self.cfg.out.join(name);
        self.outputs.push(p.clone());
        p
    }

    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let p = self.output(name);
        let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
        Ok(BufWriter::new(f))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.output(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.output(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }

    fn finish(self, command: &str) -> Result<Vec<PathBuf>> {
        let manifest = write_manifest(self.cfg, command, &self.inputs, &self.outputs)?;
        let mut out = self.outputs;
        out.push(manifest);
        Ok(out)
    }
}

/// Runs one pipeline step and returns every file it wrote, manifest last.
pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut r = Run::new(cfg)?;
    match cmd {
        Command::IngestCheck { extra } => {
            let failures = ingest_check(&mut r, extra)?;
            let written = r.finish(cmd.name())?;
            if failures > 0 {
                return Err(Error::Data(format!(
                    "{failures} input(s) failed validation; see {}",
                    cfg.out.join("ingest_report.json").display()
                )));
            }
            return Ok(written);
        }
        Command::Train { model: ModelKind::Vote } => train_vote(&mut r)?,
        Command::Train { model: ModelKind::Minutes } => train_minutes(&mut r)?,
        Command::Tune => tune(&mut r)?,
        Command::Score => score(&mut r)?,
        Command::Aggregate => aggregate(&mut r)?,
        Command::AnalyzePanel => analysis::analyze_panel(&mut r)?,
        Command::AnalyzeSep => analysis::analyze_sep(&mut r)?,
        Command::AnalyzeOpp => analysis::analyze_opp(&mut r)?,
        Command::EventStudy => event_study_cmd(&mut r)?,
        Command::Report => report(&mut r)?,
    }
    r.finish(cmd.name())
}

#[derive(Debug, Serialize)]
struct FileCheck {
    kind: &'static str,
    path: String,
    records: usize,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct RejectRow {
    meeting_id: String,
    member_id: String,
    reason: String,
}

#[derive(Debug, Serialize)]
struct JoinCheck {
    observations: usize,
    yes: usize,
    no: usize,
    meetings_without_chair: Vec<String>,
    members_without_embedding: usize,
    rejects: Vec<RejectRow>,
}

#[derive(Debug, Serialize)]
struct IngestReport {
    files: Vec<FileCheck>,
    join: Option<JoinCheck>,
    failures: usize,
}

fn check<T>(kind: &'static str, path: &Path, load: impl FnOnce(&Path) -> Result<T>, count: impl Fn(&T) -> usize) -> (FileCheck, Option<T>) {
    let (records, error, value) = match load(path) {
        Ok(v) => (count(&v), None, Some(v)),
        Err(e) => (0, Some(e.to_string()), None),
    };
    (FileCheck { kind, path: path.display().to_string(), records, error }, value)
}

fn ingest_check(r: &mut Run, extra: &[PathBuf]) -> Result<usize> {
    let d = r.cfg.data.clone();
    let mut files = Vec::new();
    let femb = |r: &mut Run, kind: &'static str, p: &Option<PathBuf>, files: &mut Vec<FileCheck>| {
        p.as_ref().and_then(|p| {
            let (c, v) = check(kind, &r.input_path(p.clone()), load_embeddings, Vec::len);
            files.push(c);
            v
        })
    };
    let embeddings = femb(r, "embeddings", &d.embeddings, &mut files);
    femb(r, "minutes_embeddings", &d.minutes_embeddings, &mut files);
    femb(r, "sentiment_axis", &d.sentiment_axis, &mut files);
    for p in extra {
        femb(r, "embeddings", &Some(p.clone()), &mut files);
    }
    let table = |r: &mut Run, files: &mut Vec<FileCheck>, kind: &'static str, p: &Option<PathBuf>, f: &dyn Fn(&Path) -> Result<usize>| {
        if let Some(p) = p {
            files.push(check(kind, &r.input_path(p.clone()), f, |n| *n).0);
        }
    };
    table(r, &mut files, "tealbook", &d.tealbook, &|p| load_tealbook(p).map(|v| v.len()));
    table(r, &mut files, "sep", &d.sep, &|p| load_sep(p).map(|v| v.len()));
    table(r, &mut files, "opp", &d.opp, &|p| load_opp(p).map(|v| v.len()));
    table(r, &mut files, "prices", &d.prices, &|p| load_prices(p).map(|m| m.values().map(|s| s.observations.len()).sum()));
    table(r, &mut files, "minutes_releases", &d.minutes_releases, &|p| load_minutes_releases(p).map(|v| v.len()));
    table(r, &mut files, "events", &d.events, &|p| load_events(p).map(|v| v.len()));
    table(r, &mut files, "lexicon", &d.lexicon, &|p| Lexicon::from_file(p).map(|l| l.len()));
    let votes = d.votes.as_ref().and_then(|p| {
        let (c, v) = check("votes", &r.input_path(p.clone()), load_votes, Vec::len);
        files.push(c);
        v
    });
    let profiles = d.profiles.as_ref().and_then(|p| {
        let (c, v) = check("profiles", &r.input_path(p.clone()), load_profiles, BTreeMap::len);
        files.push(c);
        v
    });
    if files.is_empty() {
        return Err(Error::Config("ingest-check needs at least one configured input or embedding file".into()));
    }
    let join = match (votes, profiles, embeddings) {
        (Some(v), Some(p), Some(e)) => Some(join_check(&join_panel(&v, &p, e))),
        _ => None,
    };
    let failures = files.iter().filter(|f| f.error.is_some()).count();
    r.write_json("ingest_report.json", &IngestReport { files, join, failures })?;
    Ok(failures)
}

fn join_check(panel: &JoinedPanel) -> JoinCheck {
    let no = panel.observations.iter().filter(|o| o.vote == Vote::No).count();
    JoinCheck {
        observations: panel.observations.len(),
        yes: panel.observations.len() - no,
        no,
        meetings_without_chair: panel
            .warnings
            .iter()
            .map(|w| match w {
                JoinWarning::MissingChairEmbedding { meeting_id, .. } => meeting_id.clone(),
            })
            .collect(),
        members_without_embedding: panel.members_without_embedding,
        rejects: panel
            .rejects
            .iter()
            .map(|x| RejectRow {
                meeting_id: x.meeting_id.clone(),
                member_id: x.member_id.clone(),
                reason: format!("{:?}", x.reason),
            })
            .collect(),
    }
}

pub(crate) fn joined(r: &mut Run) -> Result<JoinedPanel> {
    let d = r.cfg.data.clone();
    let meetings = load_votes(&r.input("votes", &d.votes)?)?;
    let profiles = load_profiles(&r.input("profiles", &d.profiles)?)?;
    let embeddings = load_embeddings(&r.input("embeddings", &d.embeddings)?)?;
    let panel = join_panel(&meetings, &profiles, embeddings);
    if panel.observations.is_empty() {
        return Err(Error::InsufficientData("no observations after joining votes, profiles and embeddings".into()));
    }
    Ok(panel)
}

fn vote_split(r: &mut Run) -> Result<(JoinedPanel, BalancedSplit<VoteExample>)> {
    let panel = joined(r)?;
    let examples: Vec<VoteExample> = panel.observations.iter().map(VoteExample::from).collect();
    let split = split_and_oversample(&examples, r.cfg.train.split_frac, seed::derive(r.cfg.seed, &[1, 0]))?;
    Ok((panel, split))
}

fn train_config(r: &Run) -> TrainConfig {
    TrainConfig { seed: seed::derive(r.cfg.seed, &[1, 1]), ..r.cfg.train }
}

/// Writes the trace of a diverged run before passing the error on.
fn keep_trace<T>(r: &mut Run, name: &str, res: Result<T>) -> Result<T> {
    if let Err(Error::TrainingDiverged { trace, .. }) = &res {
        let w = r.create(name)?;
        write_trace_csv(w, trace)?;
    }
    res
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    observations: usize,
    train_size: usize,
    test_size: usize,
    test_original_size: usize,
    best_step: usize,
    steps_run: usize,
    best_test_loss: f64,
    test: crate::train::EvalMetrics,
    test_original: crate::train::EvalMetrics,
    hyper: crate::nn::HyperConfig,
}

fn train_vote(r: &mut Run) -> Result<()> {
    let (panel, split) = vote_split(r)?;
    let model = ClassifierParams::init(r.cfg.model, r.cfg.hyper, seed::derive(r.cfg.seed, &[2]))?;
    let tcfg = train_config(r);
    let out = train_model(model, &split.train, &split.test, &tcfg, r.cfg.hyper.lr0);
    let out = keep_trace(r, "train_trace.csv", out)?;
    let ckpt = r.output("model.fwts");
    out.model.save(&ckpt)?;
    r.output("model.fwts.json");
    write_trace_csv(r.create("train_trace.csv")?, &out.trace)?;
    let summary = TrainSummary {
        observations: panel.observations.len(),
        train_size: split.train.len(),
        test_size: split.test.len(),
        test_original_size: split.test_original.len(),
        best_step: out.best_step,
        steps_run: out.steps_run,
        best_test_loss: out.best_test_loss,
        test: out.test_metrics,
        test_original: evaluate_set(&out.model, &split.test_original)?,
        hyper: r.cfg.hyper,
    };
    r.write_json("train_summary.json", &summary)
}

fn tune(r: &mut Run) -> Result<()> {
    let (_, split) = vote_split(r)?;
    let tcfg = train_config(r);
    let (trials, best) = hyper_search(&split, r.cfg.model, &tcfg, r.cfg.tune.budget, seed::derive(r.cfg.seed, &[3]))?;
    r.write_json("tune_trials.json", &trials)?;
    let ckpt = r.output("tuned_model.fwts");
    best.save(&ckpt)?;
    r.output("tuned_model.fwts.json");
    Ok(())
}

fn score(r: &mut Run) -> Result<()> {
    let ckpt = r.input_path(r.cfg.checkpoint());
    let params = ClassifierParams::load(&ckpt)?;
    let panel = joined(r)?;
    let obs = score_panel(&panel.observations, &params)?;
    let w = r.create("panel.csv")?;
    write_panel_csv(w, &obs)
}

fn aggregate(r: &mut Run) -> Result<()> {
    let p = r.input_path(r.cfg.panel_path());
    let obs = read_panel_csv(File::open(&p).map_err(|e| Error::io(&p, e))?)?;
    let meetings = aggregate_panel(&obs)?;
    write_meetings_csv(r.create("meetings.csv")?, &meetings)?;
    write_summary_csv(r.create("summary.csv")?, &summary_table(&obs, &meetings)?)
}

pub(crate) fn meetings_input(r: &mut Run) -> Result<Vec<crate::dissent::MeetingDissent>> {
    let p = r.input_path(r.cfg.meetings_path());
    read_meetings_csv(File::open(&p).map_err(|e| Error::io(&p, e))?)
}

fn train_minutes(r: &mut Run) -> Result<()> {
    let levels: BTreeMap<String, f64> = meetings_input(r)?.into_iter().map(|m| (m.meeting_id, m.hd)).collect();
    let d = r.cfg.data.clone();
    let docs = load_embeddings(&r.input("minutes_embeddings", &d.minutes_embeddings)?)?;
    let mut examples = Vec::new();
    let mut unmatched = Vec::new();
    for doc in docs {
        match levels.get(doc.meeting_id()) {
            Some(&target) => examples.push(MinutesExample { id: examples.len(), doc: Arc::new(doc), target }),
            None => unmatched.push(doc.meeting_id().to_string()),
        }
    }
    let m = r.cfg.minutes;
    if examples.len() < m.folds {
        return Err(Error::InsufficientData(format!(
            "{} minutes documents with a dissent level; {} folds requested",
            examples.len(),
            m.folds
        )));
    }
    let dims = r.cfg.model;
    let master = seed::derive(r.cfg.seed, &[4]);
    let tcfg = TrainConfig { seed: seed::derive(master, &[0]), ..m.train };
    let cv = kfold_cv::<MinutesParams, _>(&examples, m.folds, &tcfg, m.model.lr0, |fold| {
        MinutesParams::init(dims, m.model, seed::derive(master, &[1, fold as u64]))
    })?;
    // Final fit on every document; the training set also drives early stopping.
    let model = MinutesParams::init(dims, m.model, seed::derive(master, &[2]))?;
    let final_cfg = TrainConfig { seed: seed::derive(master, &[3]), ..m.train };
    let out = train_model(model, &examples, &examples, &final_cfg, m.model.lr0);
    let out = keep_trace(r, "minutes_trace.csv", out)?;
    let ckpt = r.output("minutes_model.fwts");
    out.model.save(&ckpt)?;
    r.output("minutes_model.fwts.json");
    write_trace_csv(r.create("minutes_trace.csv")?, &out.trace)?;
    #[derive(Serialize)]
    struct Summary {
        documents: usize,
        unmatched: Vec<String>,
        cv: crate::train::CvReport,
        final_fit: crate::train::EvalMetrics,
        best_step: usize,
    }
    r.write_json(
        "minutes_cv.json",
        &Summary { documents: examples.len(), unmatched, cv, final_fit: out.test_metrics, best_step: out.best_step },
    )
}

/// Per-row mean over every sentence of every record.
fn sentence_centroid(records: &[&EmbeddedTranscript]) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = records
        .iter()
        .flat_map(|rec| (0..rec.n_sentences()).map(move |i| rec.row(i).into_iter().map(f64::from).collect()))
        .collect();
    centroid(&rows)
}

/// Release events scored by the minutes model and placed on the dove/hawk axis.
fn derived_events(r: &mut Run) -> Result<Vec<Event>> {
    let d = r.cfg.data.clone();
    let params = MinutesParams::load(&r.input_path(r.cfg.minutes_checkpoint()))?;
    let docs = load_embeddings(&r.input("minutes_embeddings", &d.minutes_embeddings)?)?;
    let releases = load_minutes_releases(&r.input("minutes_releases", &d.minutes_releases)?)?;
    let axis = load_embeddings(&r.input("sentiment_axis", &d.sentiment_axis)?)?;
    let pole = |name: &str| -> Result<Vec<f64>> {
        let recs: Vec<&EmbeddedTranscript> = axis.iter().filter(|a| a.member_id() == name).collect();
        if recs.is_empty() {
            return Err(Error::Data(format!("sentiment axis file has no '{name}' record")));
        }
        sentence_centroid(&recs)
    };
    let (dove, hawk) = (pole("dove")?, pole("hawk")?);
    let by_meeting: BTreeMap<&str, &EmbeddedTranscript> = docs.iter().map(|doc| (doc.meeting_id(), doc)).collect();
    let mut rng = seed::stream(0, &[]);
    let mut events = Vec::new();
    for rel in &releases {
        let Some(doc) = by_meeting.get(rel.meeting_id.as_str()) else {
            continue;
        };
        events.push(Event {
            date: rel.release_date,
            hd: forward_minutes(doc, &params, false, &mut rng)?,
            sentiment: sentiment_axis(&doc.mean_vector(), &dove, &hawk)?,
        });
    }
    if events.is_empty() {
        return Err(Error::InsufficientData("no minutes release matches a minutes document".into()));
    }
    Ok(events)
}

#[derive(Debug, Serialize)]
struct IndicatorNotes {
    n_by_horizon: Vec<usize>,
    notes: Vec<String>,
}

fn event_study_cmd(r: &mut Run) -> Result<()> {
    let d = r.cfg.data.clone();
    let events = match &d.events {
        Some(p) => load_events(&r.input_path(p.clone()))?,
        None => derived_events(r)?,
    };
    let prices = load_prices(&r.input("prices", &d.prices)?)?;
    let mut panel = EventPanel::new(events)?;
    {
        let mut w = csv::Writer::from_writer(r.create("events.csv")?);
        for e in &panel.events {
            w.serialize(e).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("events.csv", e))?;
    }
    let opts = r.cfg.bootstrap(seed::derive(r.cfg.seed, &[6]));
    let mut notes = BTreeMap::new();
    for name in &r.cfg.event_study.indicators {
        let ind = Indicator::parse(name)?;
        panel.add_indicator(&ind, &prices)?;
        let res = event_study(&panel, &ind.name(), &opts)?;
        let path = r.output(&format!("event_study_{}.csv", ind.name()));
        write_projection_csv(&path, &res)?;
        notes.insert(ind.name(), IndicatorNotes { n_by_horizon: res.n_by_horizon, notes: res.notes });
    }
    r.write_json("event_study_notes.json", &notes)
}

/// Copies every CSV and text table of the output directory into
/// `report/`, with an index of content hashes.
fn report(r: &mut Run) -> Result<()> {
    let out = r.cfg.out.clone();
    let dir = out.join("report");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .map_err(|e| Error::io(&out, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv") || n.ends_with(".txt"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::InsufficientData(format!("no CSV or table files in {}", out.display())));
    }
    let mut index: Vec<FileHash> = Vec::new();
    for n in &names {
        let src = r.input_path(out.join(n));
        let dst = r.output(&format!("report/{n}"));
        std::fs::copy(&src, &dst).map_err(|e| Error::io(&dst, e))?;
        index.push(hash_file(&dst, n)?);
    }
    r.write_json("report/index.json", &index)
}
