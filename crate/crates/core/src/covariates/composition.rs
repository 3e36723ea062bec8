use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::corpus::{Gender, MeetingRecord, MemberProfile, Party, Region, TealbookSeries, TealbookVariable};
use crate::error::{Error, Result};

pub const DAYS_PER_YEAR: f64 = 365.25;

/// Shannon entropy of the category shares in base `base`, so `base`
/// equally populated categories give 1. Empty categories contribute 0.
pub fn entropy(counts: &[f64], base: usize) -> Result<f64> {
    if base < 2 {
        return Err(Error::Config(format!("entropy base {base} must be at least 2")));
    }
    if counts.len() > base {
        return Err(Error::Config(format!("{} categories exceed base {base}", counts.len())));
    }
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Data("category counts must be finite and non-negative".into()));
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedEntropy);
    }
    let ln_b = (base as f64).ln();
    let h = counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.ln() / ln_b
        })
        .sum::<f64>();
    Ok(h.clamp(0.0, 1.0))
}

/// OLS slope of the five points against 0..4, and their sample sd.
pub fn trend_and_sd(points: &[f64; 5]) -> Result<(f64, f64)> {
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("forecast points must be finite".into()));
    }
    let mean = points.iter().sum::<f64>() / 5.0;
    // x - mean(x) for x = 0..4, and its sum of squares (10).
    let dx = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let slope = points.iter().zip(dx).map(|(y, d)| (y - mean) * d).sum::<f64>() / 10.0;
    let sd = sample_sd(points);
    Ok((slope, sd))
}

fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 || x.iter().all(|&v| v == x[0]) {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (hit, n) = flags.fold((0usize, 0usize), |(h, n), f| (h + usize::from(f), n + 1));
    if n == 0 {
        0.0
    } else {
        hit as f64 / n as f64
    }
}

fn years_between(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / DAYS_PER_YEAR
}

/// Member-composition block of the meeting covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Composition {
    pub n_members: usize,
    #[serde(rename = "D_experience")]
    pub d_experience: f64,
    #[serde(rename = "D_age")]
    pub d_age: f64,
    #[serde(rename = "D_schoolwealth")]
    pub d_schoolwealth: f64,
    #[serde(rename = "P_gender")]
    pub p_gender: f64,
    #[serde(rename = "P_major")]
    pub p_major: f64,
    #[serde(rename = "P_depression")]
    pub p_depression: f64,
    #[serde(rename = "P_inflation")]
    pub p_inflation: f64,
    #[serde(rename = "P_wwii")]
    pub p_wwii: f64,
    #[serde(rename = "P_apptdem")]
    pub p_apptdem: f64,
    #[serde(rename = "E_hometown")]
    pub e_hometown: f64,
    #[serde(rename = "E_school")]
    pub e_school: f64,
    #[serde(rename = "E_potus")]
    pub e_potus: f64,
    /// Attendees without a profile; they are left out of every statistic.
    #[serde(skip)]
    pub missing_profiles: Vec<String>,
}

/// Composition statistics over every attendee of the meeting, chair included.
///
/// Ages and tenures are in fractional years at the meeting date; spreads
/// are sample standard deviations; `P_gender` is the female share.
pub fn member_composition(meeting: &MeetingRecord, profiles: &BTreeMap<String, MemberProfile>) -> Result<Composition> {
    let mut present = Vec::new();
    let mut missing_profiles = Vec::new();
    for (id, _) in &meeting.attendees {
        match profiles.get(id) {
            Some(p) => present.push(p),
            None => missing_profiles.push(id.clone()),
        }
    }
    if present.is_empty() {
        return Err(Error::InsufficientData(format!("{}: no attendee has a profile", meeting.meeting_id)));
    }
    let date = meeting.date;
    let mut experience = Vec::with_capacity(present.len());
    for p in &present {
        if p.term_start > date {
            return Err(Error::Data(format!(
                "{}: {} starts the term on {} after the meeting",
                meeting.meeting_id, p.member_id, p.term_start
            )));
        }
        experience.push(years_between(p.term_start, date));
    }
    let age: Vec<f64> = present.iter().map(|p| years_between(p.birth_date, date)).collect();
    let wealth: Vec<f64> = present.iter().map(|p| p.school_wealth).collect();
    let region_counts = |regions: &[Region], pick: &dyn Fn(&MemberProfile) -> Region| -> Vec<f64> {
        regions
            .iter()
            .map(|r| present.iter().filter(|p| pick(p) == *r).count() as f64)
            .collect()
    };
    let hometown = region_counts(&Region::HOMETOWN, &|p| p.hometown_region);
    let school = region_counts(&Region::SCHOOL, &|p| p.school_region);
    let dem = present.iter().filter(|p| p.appt_party == Party::Dem).count() as f64;
    let party = [dem, present.len() as f64 - dem];
    Ok(Composition {
        n_members: present.len(),
        d_experience: sample_sd(&experience),
        d_age: sample_sd(&age),
        d_schoolwealth: sample_sd(&wealth),
        p_gender: fraction(present.iter().map(|p| p.gender == Gender::F)),
        p_major: fraction(present.iter().map(|p| p.econ_major)),
        p_depression: fraction(present.iter().map(|p| p.great_depression)),
        p_inflation: fraction(present.iter().map(|p| p.great_inflation)),
        p_wwii: fraction(present.iter().map(|p| p.wwii)),
        p_apptdem: fraction(present.iter().map(|p| p.appt_party == Party::Dem)),
        e_hometown: entropy(&hometown, Region::HOMETOWN.len())?,
        e_school: entropy(&school, Region::SCHOOL.len())?,
        e_potus: entropy(&party, 2)?,
        missing_profiles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeetingCovariates {
    pub meeting_id: String,
    pub date: NaiveDate,
    #[serde(rename = "T_unemp")]
    pub t_unemp: Option<f64>,
    #[serde(rename = "D_unemp")]
    pub d_unemp: Option<f64>,
    #[serde(rename = "T_cpi")]
    pub t_cpi: Option<f64>,
    #[serde(rename = "D_cpi")]
    pub d_cpi: Option<f64>,
    #[serde(flatten)]
    pub composition: Composition,
    pub incumbent_dem: u8,
}

/// Covariates for every meeting; forecast-based fields are empty where
/// the meeting has no staff forecast for that variable.
pub fn meeting_covariates(
    meetings: &[MeetingRecord],
    profiles: &BTreeMap<String, MemberProfile>,
    tealbook: &[TealbookSeries],
) -> Result<Vec<MeetingCovariates>> {
    let mut forecasts: BTreeMap<(&str, TealbookVariable), &[f64; 5]> = BTreeMap::new();
    for s in tealbook {
        if forecasts.insert((&s.meeting_id, s.variable), &s.points).is_some() {
            return Err(Error::Data(format!("{}: duplicate {:?} forecast", s.meeting_id, s.variable)));
        }
    }
    meetings
        .iter()
        .map(|m| {
            let trend = |v| forecasts.get(&(m.meeting_id.as_str(), v)).map(|p| trend_and_sd(p)).transpose();
            let unemp = trend(TealbookVariable::Unemployment)?;
            let cpi = trend(TealbookVariable::CoreCpi)?;
            Ok(MeetingCovariates {
                meeting_id: m.meeting_id.clone(),
                date: m.date,
                t_unemp: unemp.map(|t| t.0),
                d_unemp: unemp.map(|t| t.1),
                t_cpi: cpi.map(|t| t.0),
                d_cpi: cpi.map(|t| t.1),
                composition: member_composition(m, profiles)?,
                incumbent_dem: u8::from(m.incumbent_dem),
            })
        })
        .collect()
}

/// Column order of [`write_covariates_csv`].
pub const COVARIATE_COLUMNS: [&str; 20] = [
    "meeting_id",
    "date",
    "T_unemp",
    "D_unemp",
    "T_cpi",
    "D_cpi",
    "n_members",
    "D_experience",
    "D_age",
    "D_schoolwealth",
    "P_gender",
    "P_major",
    "P_depression",
    "P_inflation",
    "P_wwii",
    "P_apptdem",
    "E_hometown",
    "E_school",
    "E_potus",
    "incumbent_dem",
];

/// One row per meeting; missing forecast fields are empty.
pub fn write_covariates_csv<W: Write>(w: W, rows: &[MeetingCovariates]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Data(e.to_string());
    wtr.write_record(COVARIATE_COLUMNS).map_err(err)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in rows {
        let c = &r.composition;
        let mut rec = vec![r.meeting_id.clone(), r.date.to_string(), opt(r.t_unemp), opt(r.d_unemp), opt(r.t_cpi), opt(r.d_cpi)];
        rec.push(c.n_members.to_string());
        rec.extend(
            [
                c.d_experience,
                c.d_age,
                c.d_schoolwealth,
                c.p_gender,
                c.p_major,
                c.p_depression,
                c.p_inflation,
                c.p_wwii,
                c.p_apptdem,
                c.e_hometown,
                c.e_school,
                c.e_potus,
            ]
            .map(|v| v.to_string()),
        );
        rec.push(r.incumbent_dem.to_string());
        wtr.write_record(&rec).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Data(e.to_string()))
}
