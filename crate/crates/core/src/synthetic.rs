//! Synthetic stand-ins for every input file, with known structure planted
//! in them: NO voters' transcripts drift from their chair along a fixed
//! direction, minutes carry their meeting's dissent level, and market
//! returns on release days load on the released dissent.
//!
//! Used by the examples, the integration tests and smoke runs of the CLI.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::corpus::{
    write_embeddings, EmbeddedTranscript, Gender, MeetingRecord, MemberProfile, Party, PolicyAction, Region, Role,
    Vote, CORE_CPI_START, EMBED_DIM,
};
use crate::error::{Error, Result};
use crate::market::Event;
use crate::pipeline::DataPaths;
use crate::seed;

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Shape of a synthetic vote history.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteSpec {
    pub meetings: usize,
    pub first_meeting: NaiveDate,
    pub spacing_days: i64,
    /// Non-chair votes over all meetings, spread as evenly as possible.
    pub non_chair_votes: usize,
    pub no_votes: usize,
    pub seed: u64,
}

impl VoteSpec {
    /// 370 meetings from 1976 to 2018 with 3,959 non-chair votes, 300 of them NO.
    pub fn historical() -> Self {
        Self {
            meetings: 370,
            first_meeting: date(1976, 1, 20),
            spacing_days: 42,
            non_chair_votes: 3959,
            no_votes: 300,
            seed: 1976,
        }
    }

    pub fn small(meetings: usize, voters: usize, no_votes: usize, seed: u64) -> Self {
        Self {
            meetings,
            first_meeting: date(2014, 1, 29),
            spacing_days: 45,
            non_chair_votes: meetings * voters,
            no_votes,
            seed,
        }
    }
}

fn dem_president(d: NaiveDate) -> bool {
    let y = d.year();
    // inauguration in late January
    let y = if d.month() == 1 && d.day() < 20 { y - 1 } else { y };
    matches!(y, 1977..=1980 | 1993..=2000 | 2009..=2016 | 2021..=2024)
}

fn new_profile(id: String, term_start: NaiveDate, role: Role, rng: &mut ChaCha8Rng) -> MemberProfile {
    let birth = term_start - Duration::days(rng.random_range(42 * 365..66 * 365));
    let lived_before_21 = |start: i32, end: i32| birth.year() + 21 > start && birth.year() <= end;
    MemberProfile {
        member_id: id,
        birth_date: birth,
        gender: if rng.random::<f64>() < 0.15 { Gender::F } else { Gender::M },
        hometown_region: *Region::HOMETOWN.choose(rng).expect("nonempty"),
        school_region: *Region::SCHOOL.choose(rng).expect("nonempty"),
        school_wealth: (13.0 + 0.8 * gauss(rng)).exp().round(),
        econ_major: rng.random::<f64>() < 0.7,
        term_start,
        role,
        appt_party: if rng.random::<bool>() { Party::Dem } else { Party::Rep },
        great_depression: lived_before_21(1929, 1939),
        great_inflation: lived_before_21(1965, 1982),
        wwii: lived_before_21(1939, 1945),
    }
}

/// Meetings and the profiles of everyone who attends them.
///
/// Members serve rotating terms; the chair changes every 60 to 90
/// meetings. NO votes fall on uniformly chosen non-chair slots.
pub fn vote_history(spec: &VoteSpec) -> Result<(Vec<MeetingRecord>, BTreeMap<String, MemberProfile>)> {
    if spec.meetings == 0 || spec.non_chair_votes < spec.meetings {
        return Err(Error::Config("need at least one non-chair vote per meeting".into()));
    }
    if spec.no_votes > spec.non_chair_votes {
        return Err(Error::Config("more NO votes than votes".into()));
    }
    let mut rng = seed::stream(spec.seed, &[0]);
    let base = spec.non_chair_votes / spec.meetings;
    let mut sizes = vec![base; spec.meetings];
    let mut extra: Vec<usize> = (0..spec.meetings).collect();
    extra.shuffle(&mut rng);
    for &i in extra.iter().take(spec.non_chair_votes % spec.meetings) {
        sizes[i] += 1;
    }
    let roster_size = base + 5;
    let dates: Vec<NaiveDate> =
        (0..spec.meetings).map(|i| spec.first_meeting + Duration::days(spec.spacing_days * i as i64)).collect();

    let mut profiles = BTreeMap::new();
    let mut next_id = 0usize;
    let mut fresh = |term_start: NaiveDate, role: Role, rng: &mut ChaCha8Rng, profiles: &mut BTreeMap<String, MemberProfile>| {
        next_id += 1;
        let prefix = if role == Role::Chair { "C" } else { "M" };
        let id = format!("{prefix}{next_id:03}");
        profiles.insert(id.clone(), new_profile(id.clone(), term_start, role, rng));
        id
    };
    let mut roster: Vec<(String, usize)> = (0..roster_size)
        .map(|_| {
            let start = dates[0] - Duration::days(rng.random_range(30..8 * 365));
            let id = fresh(start, if rng.random::<bool>() { Role::Governor } else { Role::President }, &mut rng, &mut profiles);
            (id, rng.random_range(1..70))
        })
        .collect();
    let mut chair = fresh(dates[0] - Duration::days(400), Role::Chair, &mut rng, &mut profiles);
    let mut chair_until = rng.random_range(60..90);

    let mut meetings = Vec::with_capacity(spec.meetings);
    for (i, &d) in dates.iter().enumerate() {
        for slot in roster.iter_mut() {
            if slot.1 <= i {
                let role = if rng.random::<bool>() { Role::Governor } else { Role::President };
                let start = d - Duration::days(rng.random_range(1..40));
                *slot = (fresh(start, role, &mut rng, &mut profiles), i + rng.random_range(50..90));
            }
        }
        if i >= chair_until {
            chair = fresh(d - Duration::days(rng.random_range(1..40)), Role::Chair, &mut rng, &mut profiles);
            chair_until = i + rng.random_range(60..90);
        }
        let mut voters: Vec<&String> = roster.iter().map(|(id, _)| id).collect();
        voters.shuffle(&mut rng);
        voters.truncate(sizes[i]);
        let mut attendees = vec![(chair.clone(), Vote::Yes)];
        attendees.extend(voters.into_iter().map(|id| (id.clone(), Vote::Yes)));
        let action = match rng.random_range(0..10) {
            0..=5 => PolicyAction::Unchanged,
            6 | 7 => PolicyAction::Increase,
            _ => PolicyAction::Decrease,
        };
        meetings.push(MeetingRecord {
            meeting_id: d.format("%Y-%m-%d").to_string(),
            date: d,
            chair_id: chair.clone(),
            attendees,
            policy_action: action,
            incumbent_dem: dem_president(d),
        });
    }

    let mut slots: Vec<(usize, usize)> = meetings
        .iter()
        .enumerate()
        .flat_map(|(m, rec)| (1..rec.attendees.len()).map(move |a| (m, a)))
        .collect();
    slots.shuffle(&mut rng);
    for &(m, a) in slots.iter().take(spec.no_votes) {
        meetings[m].attendees[a].1 = Vote::No;
    }
    Ok((meetings, profiles))
}

/// How synthetic transcripts are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptSpec {
    /// Inclusive range of populated sentences per document.
    pub sentences: (usize, usize),
    /// Per-coordinate shift of NO voters along the dissent direction.
    pub signal: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for TranscriptSpec {
    fn default() -> Self {
        Self { sentences: (2, 6), signal: 0.5, noise: 1.0, seed: 0 }
    }
}

fn direction(seed_value: u64, which: u64) -> Vec<f64> {
    let mut rng = seed::stream(seed_value, &[1, which]);
    (0..EMBED_DIM).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn document(
    meeting_id: &str,
    member_id: &str,
    center: &[f64],
    n: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddedTranscript> {
    let rows: Vec<f32> = (0..n)
        .flat_map(|_| center.iter().map(|c| (c + noise * gauss(rng)) as f32).collect::<Vec<_>>())
        .collect();
    EmbeddedTranscript::new(meeting_id, member_id, rows)
}

/// One transcript per attendee, chair included, except the listed
/// `(meeting_id, member_id)` pairs.
pub fn transcripts(meetings: &[MeetingRecord], spec: &TranscriptSpec, skip: &[(String, String)]) -> Result<Vec<EmbeddedTranscript>> {
    let dissent = direction(spec.seed, 0);
    let mut out = Vec::new();
    for (i, m) in meetings.iter().enumerate() {
        let mut rng = seed::stream(spec.seed, &[2, i as u64]);
        let topic: Vec<f64> = (0..EMBED_DIM).map(|_| gauss(&mut rng)).collect();
        for (member, vote) in &m.attendees {
            if skip.iter().any(|(a, b)| a == &m.meeting_id && b == member) {
                continue;
            }
            let shift = if *vote == Vote::No { spec.signal } else { 0.0 };
            let center: Vec<f64> = topic.iter().zip(&dissent).map(|(t, d)| t + shift * d).collect();
            let n = rng.random_range(spec.sentences.0..=spec.sentences.1);
            out.push(document(&m.meeting_id, member, &center, n, spec.noise, &mut rng)?);
        }
    }
    Ok(out)
}

/// Minutes documents (member id `minutes`) whose position along a fixed
/// direction is proportional to the meeting's dissent level.
pub fn minutes_documents(levels: &[(String, f64)], spec: &TranscriptSpec) -> Result<Vec<EmbeddedTranscript>> {
    let axis = direction(spec.seed, 3);
    levels
        .iter()
        .enumerate()
        .map(|(i, (id, hd))| {
            let mut rng = seed::stream(spec.seed, &[4, i as u64]);
            let center: Vec<f64> = axis.iter().map(|a| 4.0 * spec.signal * (hd - 0.5) * a).collect();
            let n = rng.random_range(spec.sentences.0..=spec.sentences.1);
            document(id, "minutes", &center, n, spec.noise, &mut rng)
        })
        .collect()
}

/// Seed-term documents for the sentiment axis: member ids `dove` and `hawk`.
pub fn sentiment_axis_documents(seed_value: u64) -> Result<Vec<EmbeddedTranscript>> {
    let mut rng = seed::stream(seed_value, &[5]);
    let dove = direction(seed_value, 6);
    let hawk: Vec<f64> = direction(seed_value, 7);
    Ok(vec![
        document("axis", "dove", &dove, 4, 0.5, &mut rng)?,
        document("axis", "hawk", &hawk, 4, 0.5, &mut rng)?,
    ])
}

#[derive(Debug, Serialize)]
struct TealbookRow<'a> {
    meeting_id: &'a str,
    variable: &'static str,
    b2: f64,
    b1: f64,
    f0: f64,
    f1: f64,
    f2: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Long-format vote file, one row per attendee.
pub fn write_votes(path: &Path, meetings: &[MeetingRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        meeting_id: &'a str,
        member_id: &'a str,
        vote: Vote,
        is_chair: bool,
        policy_action: PolicyAction,
        incumbent_dem: bool,
    }
    let rows: Vec<Row> = meetings
        .iter()
        .flat_map(|m| {
            m.attendees.iter().map(move |(id, v)| Row {
                meeting_id: &m.meeting_id,
                member_id: id,
                vote: *v,
                is_chair: *id == m.chair_id,
                policy_action: m.policy_action,
                incumbent_dem: m.incumbent_dem,
            })
        })
        .collect();
    write_csv(path, &rows)
}

pub fn write_profiles(path: &Path, profiles: &BTreeMap<String, MemberProfile>) -> Result<()> {
    write_csv(path, &profiles.values().collect::<Vec<_>>())
}

/// Staff forecasts: unemployment for every meeting, core CPI from its start date.
pub fn write_tealbook(path: &Path, meetings: &[MeetingRecord], seed_value: u64) -> Result<()> {
    let mut rng = seed::stream(seed_value, &[8]);
    let (mut u, mut pi) = (6.0, 3.0);
    let mut rows = Vec::new();
    for m in meetings {
        u = (u + 0.15 * gauss(&mut rng)).clamp(3.0, 10.0);
        pi = (pi + 0.1 * gauss(&mut rng)).clamp(0.5, 8.0);
        let series = |level: f64, variable: &'static str, rng: &mut ChaCha8Rng| {
            let slope = 0.1 * gauss(rng);
            let p: Vec<f64> = (0..5)
                .map(|k| ((level + slope * (k as f64 - 2.0) + 0.05 * gauss(rng)) * 100.0).round() / 100.0)
                .collect();
            TealbookRow { meeting_id: &m.meeting_id, variable, b2: p[0], b1: p[1], f0: p[2], f1: p[3], f2: p[4] }
        };
        rows.push(series(u, "unemployment", &mut rng));
        if m.date >= CORE_CPI_START {
            rows.push(series(pi, "core_cpi", &mut rng));
        }
    }
    write_csv(path, &rows)
}

/// SEP projections from 17 anonymous participants for meetings from
/// 2007 (2012 for the funds rate). A common disagreement factor scales
/// every variable's spread.
pub fn write_sep(path: &Path, meetings: &[MeetingRecord], seed_value: u64) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        meeting_id: &'a str,
        variable: &'static str,
        horizon: &'static str,
        value: f64,
    }
    let vars = [
        ("ffr", 2012, true, 0.5),
        ("unemployment", 2007, true, 0.3),
        ("gdp_growth", 2007, true, 0.3),
        ("pce_inflation", 2007, false, 0.2),
        ("core_pce_inflation", 2007, false, 0.15),
    ];
    let mut rng = seed::stream(seed_value, &[9]);
    let mut rows = Vec::new();
    for m in meetings.iter().filter(|m| m.date.year() >= 2007) {
        let factor = (0.4 * gauss(&mut rng)).exp();
        for (var, first, long_run, scale) in vars {
            if m.date.year() < first {
                continue;
            }
            let horizons: &[&'static str] = if long_run { &["Y0", "Y1", "Y2", "long_run"] } else { &["Y0", "Y1", "Y2"] };
            for (k, h) in horizons.iter().enumerate() {
                let center = 2.0 + 0.3 * k as f64;
                let own = (0.2 * gauss(&mut rng)).exp();
                for _ in 0..17 {
                    let v = center + factor * own * scale * (1.0 + 0.3 * k as f64) * gauss(&mut rng);
                    rows.push(Row { meeting_id: &m.meeting_id, variable: var, horizon: h, value: (v * 1000.0).round() / 1000.0 });
                }
            }
        }
    }
    write_csv(path, &rows)
}

/// Monthly optimal-policy-perturbation series; the zero bound binds
/// from 2009 through 2015.
pub fn write_opp(path: &Path, from: NaiveDate, to: NaiveDate, seed_value: u64) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        date: NaiveDate,
        opp_ffr: f64,
        opp_shadow: f64,
        opp_slope: f64,
        zero_bound: u8,
    }
    let mut rng = seed::stream(seed_value, &[10]);
    let mut rows = Vec::new();
    let mut d = from;
    while d <= to {
        let zlb = (2009..=2015).contains(&d.year());
        let base = 0.5 * gauss(&mut rng);
        let crisis = if zlb { -1.5 } else { 0.0 };
        let r = |x: f64| (x * 1000.0).round() / 1000.0;
        rows.push(Row {
            date: d,
            opp_ffr: r(base),
            opp_shadow: r(base + crisis + 0.2 * gauss(&mut rng)),
            opp_slope: r(0.5 * base + crisis + 0.2 * gauss(&mut rng)),
            zero_bound: u8::from(zlb),
        });
        d = d.checked_add_months(chrono::Months::new(1)).expect("date in range");
    }
    write_csv(path, &rows)
}

/// Minutes released three weeks after each meeting.
pub fn write_releases(path: &Path, meetings: &[MeetingRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        meeting_id: &'a str,
        release_date: NaiveDate,
    }
    let rows: Vec<Row> = meetings.iter().map(|m| Row { meeting_id: &m.meeting_id, release_date: m.date + Duration::days(21) }).collect();
    write_csv(path, &rows)
}

/// Release events every `spacing` days with random dissent and sentiment.
pub fn events(n: usize, first: NaiveDate, spacing: i64, seed_value: u64) -> Vec<Event> {
    let mut rng = seed::stream(seed_value, &[11]);
    (0..n)
        .map(|i| Event {
            date: first + Duration::days(spacing * i as i64),
            hd: rng.random_range(0.1..0.7),
            sentiment: rng.random_range(-0.5..0.5),
        })
        .collect()
}

pub fn write_events(path: &Path, events: &[Event]) -> Result<()> {
    write_csv(path, events)
}

/// Weekday price bars for `symbols`. On each event's trading day the
/// return loads on dissent (`-0.02` per unit) and sentiment (`+0.01`).
pub fn write_prices(path: &Path, symbols: &[&str], from: NaiveDate, to: NaiveDate, events: &[Event], seed_value: u64) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        symbol: &'a str,
        date: NaiveDate,
        open: f64,
        close: f64,
    }
    let mut rows = Vec::new();
    for (k, sym) in symbols.iter().enumerate() {
        let mut rng = seed::stream(seed_value, &[12, k as u64]);
        let mut level: f64 = 100.0;
        let mut d = from;
        while d <= to {
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                let shock: f64 = events
                    .iter()
                    .filter(|e| {
                        let mut t = e.date;
                        while matches!(t.weekday(), Weekday::Sat | Weekday::Sun) {
                            t += Duration::days(1);
                        }
                        t == d
                    })
                    .map(|e| -0.02 * e.hd + 0.01 * e.sentiment)
                    .sum();
                let open = level * (0.002 * gauss(&mut rng)).exp();
                let close = open * (shock + 0.008 * gauss(&mut rng)).exp();
                let r = |x: f64| (x * 1e6).round() / 1e6;
                rows.push(Row { symbol: sym, date: d, open: r(open), close: r(close) });
                level = close;
            }
            d += Duration::days(1);
        }
    }
    write_csv(path, &rows)
}

/// Scale of a complete synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub votes: VoteSpec,
    pub transcripts: TranscriptSpec,
    pub events: usize,
    pub seed: u64,
}

impl DatasetSpec {
    /// Sixty meetings of a chair and five voters from 2014, small enough
    /// for tests.
    pub fn small(seed_value: u64) -> Self {
        Self {
            votes: VoteSpec::small(60, 5, 75, seed_value),
            transcripts: TranscriptSpec { seed: seed_value, ..TranscriptSpec::default() },
            events: 40,
            seed: seed_value,
        }
    }
}

/// Writes every input file under `dir` and returns their paths.
///
/// Minutes are labeled with each meeting's share of NO votes as a stand-in
/// for its transcript dissent level.
pub fn write_dataset(dir: &Path, spec: &DatasetSpec) -> Result<DataPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = |name: &str| -> PathBuf { dir.join(name) };
    let (meetings, profiles) = vote_history(&spec.votes)?;
    write_votes(&p("votes.csv"), &meetings)?;
    write_profiles(&p("profiles.csv"), &profiles)?;
    write_embeddings(&p("transcripts.femb"), &transcripts(&meetings, &spec.transcripts, &[])?)?;
    let levels: Vec<(String, f64)> = meetings
        .iter()
        .map(|m| {
            let no = m.member_votes().filter(|(_, v)| *v == Vote::No).count() as f64;
            let n = m.member_votes().count() as f64;
            (m.meeting_id.clone(), 0.2 + 0.6 * no / n)
        })
        .collect();
    write_embeddings(&p("minutes.femb"), &minutes_documents(&levels, &spec.transcripts)?)?;
    write_embeddings(&p("sentiment_axis.femb"), &sentiment_axis_documents(spec.seed)?)?;
    write_releases(&p("minutes_releases.csv"), &meetings)?;
    write_tealbook(&p("tealbook.csv"), &meetings, spec.seed)?;
    write_sep(&p("sep.csv"), &meetings, spec.seed)?;
    let first = meetings[0].date;
    let last = meetings[meetings.len() - 1].date;
    write_opp(&p("opp.csv"), first - Duration::days(90), last + Duration::days(180), spec.seed)?;
    let ev = events(spec.events, first + Duration::days(21), 20, spec.seed);
    write_events(&p("events.csv"), &ev)?;
    let end = ev.last().map_or(last, |e| e.date).max(last + Duration::days(21)) + Duration::days(40);
    let symbols: Vec<String> = crate::market::Indicator::default_set()
        .iter()
        .filter_map(|i| match i {
            crate::market::Indicator::Single(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let symbols: Vec<&str> = symbols.iter().map(String::as_str).collect();
    write_prices(&p("prices.csv"), &symbols, first - Duration::days(10), end, &ev, spec.seed)?;
    Ok(DataPaths {
        embeddings: Some(p("transcripts.femb")),
        votes: Some(p("votes.csv")),
        profiles: Some(p("profiles.csv")),
        tealbook: Some(p("tealbook.csv")),
        sep: Some(p("sep.csv")),
        opp: Some(p("opp.csv")),
        prices: Some(p("prices.csv")),
        minutes_embeddings: Some(p("minutes.femb")),
        minutes_releases: Some(p("minutes_releases.csv")),
        sentiment_axis: Some(p("sentiment_axis.femb")),
        events: Some(p("events.csv")),
        ..DataPaths::default()
    })
}
