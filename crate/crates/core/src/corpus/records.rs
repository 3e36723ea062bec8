//! Typed records for votes, member profiles, staff forecasts, SEP projections,
//! prices and optimal-policy-perturbation series, with their CSV loaders.
//!
//! Every loader validates the record invariants and reports the offending
//! row on failure. Column layouts are listed in `docs/formats.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// First meeting with a core CPI series in the staff forecast.
pub const CORE_CPI_START: NaiveDate = match NaiveDate::from_ymd_opt(1986, 2, 12) {
    Some(d) => d,
    None => panic!("invalid date"),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    NE,
    MW,
    South,
    West,
    OTH,
}

impl Region {
    pub const HOMETOWN: [Region; 5] = [Region::NE, Region::MW, Region::South, Region::West, Region::OTH];
    pub const SCHOOL: [Region; 4] = [Region::NE, Region::MW, Region::South, Region::West];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Governor,
    President,
    Chair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Dem,
    Rep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberProfile {
    pub member_id: String,
    pub birth_date: NaiveDate,
    pub gender: Gender,
    pub hometown_region: Region,
    pub school_region: Region,
    /// Endowment per student.
    pub school_wealth: f64,
    #[serde(deserialize_with = "flag")]
    pub econ_major: bool,
    pub term_start: NaiveDate,
    pub role: Role,
    pub appt_party: Party,
    /// Experienced the event before turning 21.
    #[serde(deserialize_with = "flag")]
    pub great_depression: bool,
    #[serde(deserialize_with = "flag")]
    pub great_inflation: bool,
    #[serde(deserialize_with = "flag")]
    pub wwii: bool,
}

impl MemberProfile {
    pub fn validate(&self) -> Result<()> {
        if self.birth_date >= self.term_start {
            return Err(Error::Data(format!(
                "{}: birth date {} is not before term start {}",
                self.member_id, self.birth_date, self.term_start
            )));
        }
        if self.school_region == Region::OTH {
            return Err(Error::Data(format!(
                "{}: school region must be one of NE, MW, South, West",
                self.member_id
            )));
        }
        if !(self.school_wealth.is_finite() && self.school_wealth >= 0.0) {
            return Err(Error::Data(format!("{}: invalid school wealth", self.member_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vote {
    #[serde(rename = "YES", alias = "0")]
    Yes = 0,
    #[serde(rename = "NO", alias = "1")]
    No = 1,
}

impl Vote {
    pub fn as_label(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyAction {
    Unchanged,
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeetingRecord {
    pub meeting_id: String,
    pub date: NaiveDate,
    pub chair_id: String,
    pub attendees: Vec<(String, Vote)>,
    pub policy_action: PolicyAction,
    pub incumbent_dem: bool,
}

impl MeetingRecord {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (m, _) in &self.attendees {
            if !seen.insert(m.as_str()) {
                return Err(Error::Data(format!("{}: member {m} listed twice", self.meeting_id)));
            }
        }
        match self.attendees.iter().find(|(m, _)| *m == self.chair_id) {
            None => Err(Error::Data(format!(
                "{}: chair {} is not among the attendees",
                self.meeting_id, self.chair_id
            ))),
            Some((_, Vote::No)) => Err(Error::Data(format!(
                "{}: chair {} is recorded voting NO",
                self.meeting_id, self.chair_id
            ))),
            Some(_) => Ok(()),
        }
    }

    /// Votes of the non-chair members.
    pub fn member_votes(&self) -> impl Iterator<Item = (&str, Vote)> {
        self.attendees
            .iter()
            .filter(move |(m, _)| *m != self.chair_id)
            .map(|(m, v)| (m.as_str(), *v))
    }
}

/// Parses the leading `YYYY-MM-DD` of a meeting id.
pub fn meeting_date(meeting_id: &str) -> Result<NaiveDate> {
    meeting_id
        .get(..10)
        .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
        .ok_or_else(|| Error::Data(format!("meeting id {meeting_id:?} does not start with a YYYY-MM-DD date")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TealbookVariable {
    Unemployment,
    CoreCpi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TealbookSeries {
    pub meeting_id: String,
    pub variable: TealbookVariable,
    /// `[B2, B1, F0, F1, F2]`, percent.
    pub points: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SepVariable {
    Ffr,
    Unemployment,
    GdpGrowth,
    PceInflation,
    CorePceInflation,
}

impl SepVariable {
    pub fn has_long_run(self) -> bool {
        !matches!(self, SepVariable::PceInflation | SepVariable::CorePceInflation)
    }

    pub fn first_year(self) -> i32 {
        match self {
            SepVariable::Ffr => 2012,
            _ => 2007,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Horizon {
    Y0,
    Y1,
    Y2,
    #[serde(rename = "long_run")]
    LongRun,
}

impl Horizon {
    pub const ALL: [Horizon; 4] = [Horizon::Y0, Horizon::Y1, Horizon::Y2, Horizon::LongRun];
}

#[derive(Debug, Clone, PartialEq)]
pub struct SepSnapshot {
    pub meeting_id: String,
    pub variable: SepVariable,
    pub horizon: Horizon,
    pub projections: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub close: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub symbol: String,
    pub observations: Vec<PriceBar>,
}

impl PriceSeries {
    pub fn new(symbol: impl Into<String>, observations: Vec<PriceBar>) -> Result<Self> {
        let symbol = symbol.into();
        for w in observations.windows(2) {
            if w[1].date <= w[0].date {
                return Err(Error::Data(format!(
                    "{symbol}: dates not strictly increasing at {}",
                    w[1].date
                )));
            }
        }
        if let Some(bar) = observations
            .iter()
            .find(|b| !(b.open > 0.0 && b.close > 0.0 && b.open.is_finite() && b.close.is_finite()))
        {
            return Err(Error::Data(format!("{symbol}: non-positive price on {}", bar.date)));
        }
        Ok(Self { symbol, observations })
    }

    /// Index of the first trading day on or after `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let i = self.observations.partition_point(|b| b.date < date);
        (i < self.observations.len()).then_some(i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OppObservation {
    pub date: NaiveDate,
    pub opp_ffr: f64,
    pub opp_shadow: f64,
    pub opp_slope: f64,
    #[serde(deserialize_with = "flag")]
    pub zero_bound: bool,
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        other => Err(serde::de::Error::custom(format!("not a boolean: {other:?}"))),
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Data(format!("{}: row {}: {e}", path.display(), i + 2)))
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

pub fn load_profiles(path: &Path) -> Result<BTreeMap<String, MemberProfile>> {
    let rows: Vec<MemberProfile> = read_rows(path)?;
    let mut out = BTreeMap::new();
    for p in rows {
        p.validate()?;
        if out.contains_key(&p.member_id) {
            return Err(Error::Data(format!("duplicate profile for {}", p.member_id)));
        }
        out.insert(p.member_id.clone(), p);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct VoteRow {
    meeting_id: String,
    member_id: String,
    vote: Vote,
    #[serde(deserialize_with = "flag")]
    is_chair: bool,
    policy_action: PolicyAction,
    #[serde(deserialize_with = "flag")]
    incumbent_dem: bool,
}

/// Loads the long-format vote file (one row per attendee) into meetings
/// ordered by date, then id.
pub fn load_votes(path: &Path) -> Result<Vec<MeetingRecord>> {
    let rows: Vec<VoteRow> = read_rows(path)?;
    meetings_from_rows(rows)
}

fn meetings_from_rows(rows: Vec<VoteRow>) -> Result<Vec<MeetingRecord>> {
    let mut by_id: BTreeMap<String, MeetingRecord> = BTreeMap::new();
    for row in rows {
        let date = meeting_date(&row.meeting_id)?;
        let rec = by_id.entry(row.meeting_id.clone()).or_insert_with(|| MeetingRecord {
            meeting_id: row.meeting_id.clone(),
            date,
            chair_id: String::new(),
            attendees: Vec::new(),
            policy_action: row.policy_action,
            incumbent_dem: row.incumbent_dem,
        });
        if rec.policy_action != row.policy_action || rec.incumbent_dem != row.incumbent_dem {
            return Err(Error::Data(format!(
                "{}: inconsistent meeting-level fields across rows",
                row.meeting_id
            )));
        }
        if row.is_chair {
            if !rec.chair_id.is_empty() {
                return Err(Error::Data(format!("{}: more than one chair", row.meeting_id)));
            }
            rec.chair_id = row.member_id.clone();
        }
        rec.attendees.push((row.member_id, row.vote));
    }
    let mut meetings: Vec<MeetingRecord> = by_id.into_values().collect();
    for m in &meetings {
        m.validate()?;
    }
    meetings.sort_by(|a, b| (a.date, &a.meeting_id).cmp(&(b.date, &b.meeting_id)));
    Ok(meetings)
}

#[derive(Debug, Deserialize)]
struct TealbookRow {
    meeting_id: String,
    variable: TealbookVariable,
    b2: f64,
    b1: f64,
    f0: f64,
    f1: f64,
    f2: f64,
}

pub fn load_tealbook(path: &Path) -> Result<Vec<TealbookSeries>> {
    let rows: Vec<TealbookRow> = read_rows(path)?;
    rows.into_iter()
        .map(|r| {
            let date = meeting_date(&r.meeting_id)?;
            if r.variable == TealbookVariable::CoreCpi && date < CORE_CPI_START {
                return Err(Error::Data(format!(
                    "{}: core CPI forecasts start with the {CORE_CPI_START} meeting",
                    r.meeting_id
                )));
            }
            let points = [r.b2, r.b1, r.f0, r.f1, r.f2];
            if points.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("{}: non-finite forecast point", r.meeting_id)));
            }
            Ok(TealbookSeries {
                meeting_id: r.meeting_id,
                variable: r.variable,
                points,
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct SepRow {
    meeting_id: String,
    variable: SepVariable,
    horizon: Horizon,
    value: f64,
}

/// Loads long-format SEP projections (one row per anonymous projection).
pub fn load_sep(path: &Path) -> Result<Vec<SepSnapshot>> {
    let rows: Vec<SepRow> = read_rows(path)?;
    let mut grouped: BTreeMap<(String, SepVariable, Horizon), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let date = meeting_date(&r.meeting_id)?;
        if r.horizon == Horizon::LongRun && !r.variable.has_long_run() {
            return Err(Error::Data(format!(
                "{}: {:?} has no long-run projection",
                r.meeting_id, r.variable
            )));
        }
        if chrono::Datelike::year(&date) < r.variable.first_year() {
            return Err(Error::Data(format!(
                "{}: {:?} projections start in {}",
                r.meeting_id,
                r.variable,
                r.variable.first_year()
            )));
        }
        if !r.value.is_finite() {
            return Err(Error::Data(format!("{}: non-finite projection", r.meeting_id)));
        }
        grouped
            .entry((r.meeting_id, r.variable, r.horizon))
            .or_default()
            .push(r.value);
    }
    Ok(grouped
        .into_iter()
        .map(|((meeting_id, variable, horizon), projections)| SepSnapshot {
            meeting_id,
            variable,
            horizon,
            projections,
        })
        .collect())
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    symbol: String,
    date: NaiveDate,
    open: f64,
    close: f64,
}

/// Loads a long-format price file into one series per symbol.
pub fn load_prices(path: &Path) -> Result<BTreeMap<String, PriceSeries>> {
    let rows: Vec<PriceRow> = read_rows(path)?;
    let mut grouped: BTreeMap<String, Vec<PriceBar>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.symbol).or_default().push(PriceBar {
            date: r.date,
            open: r.open,
            close: r.close,
        });
    }
    grouped
        .into_iter()
        .map(|(sym, bars)| PriceSeries::new(sym.clone(), bars).map(|s| (sym, s)))
        .collect()
}

pub fn load_opp(path: &Path) -> Result<Vec<OppObservation>> {
    let mut rows: Vec<OppObservation> = read_rows(path)?;
    rows.sort_by_key(|r| r.date);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MinutesRelease {
    pub meeting_id: String,
    pub release_date: NaiveDate,
}

pub fn load_minutes_releases(path: &Path) -> Result<Vec<MinutesRelease>> {
    let mut rows: Vec<MinutesRelease> = read_rows(path)?;
    rows.sort_by(|a, b| (a.release_date, &a.meeting_id).cmp(&(b.release_date, &b.meeting_id)));
    Ok(rows)
}

/// Index of the most recent meeting held on or before `date`.
pub fn meeting_on_or_before(meeting_dates: &[NaiveDate], date: NaiveDate) -> Option<usize> {
    let i = meeting_dates.partition_point(|d| *d <= date);
    i.checked_sub(1)
}
