//! Hidden-dissent scores per member, meeting-level aggregates and their
//! summary statistics.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{meeting_date, EmbeddedTranscript, Observation};
use crate::error::{Error, Result};
use crate::nn::{forward_classifier, ClassifierParams};

/// Score and vote of one non-chair member at one meeting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissentObservation {
    pub meeting_id: String,
    pub date: NaiveDate,
    pub member_id: String,
    pub hd: f64,
    pub v: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingDissent {
    pub meeting_id: String,
    pub date: NaiveDate,
    #[serde(rename = "HD")]
    pub hd: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub n_members: usize,
}

/// Probability that the classifier assigns the member's transcript to a NO
/// vote, relative to the chair's transcript (eval mode).
pub fn score_member(chair: &EmbeddedTranscript, member: &EmbeddedTranscript, params: &ClassifierParams) -> Result<f64> {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    forward_classifier(chair, member, params, false, &mut rng)
}

/// Scores every joined observation; output order follows the input.
pub fn score_panel(observations: &[Observation], params: &ClassifierParams) -> Result<Vec<DissentObservation>> {
    observations
        .par_iter()
        .map(|o| {
            Ok(DissentObservation {
                meeting_id: o.meeting_id.clone(),
                date: meeting_date(&o.meeting_id)?,
                member_id: o.member_id.clone(),
                hd: score_member(&o.chair, &o.member, params)?,
                v: o.vote.as_label(),
            })
        })
        .collect()
}

/// Mean score and NO-vote share of one meeting's observations.
pub fn aggregate_meeting(obs: &[DissentObservation]) -> Result<MeetingDissent> {
    let first = obs.first().ok_or_else(|| Error::EmptyAggregation("meeting has no scored members".into()))?;
    if let Some(o) = obs.iter().find(|o| o.meeting_id != first.meeting_id) {
        return Err(Error::Data(format!(
            "aggregation mixes meetings {} and {}",
            first.meeting_id, o.meeting_id
        )));
    }
    let n = obs.len() as f64;
    Ok(MeetingDissent {
        meeting_id: first.meeting_id.clone(),
        date: first.date,
        hd: obs.iter().map(|o| o.hd).sum::<f64>() / n,
        v: obs.iter().map(|o| f64::from(o.v)).sum::<f64>() / n,
        n_members: obs.len(),
    })
}

/// Meeting-level panel, sorted by meeting id.
pub fn aggregate_panel(obs: &[DissentObservation]) -> Result<Vec<MeetingDissent>> {
    let mut groups: BTreeMap<&str, Vec<DissentObservation>> = BTreeMap::new();
    for o in obs {
        groups.entry(&o.meeting_id).or_default().push(o.clone());
    }
    groups.values().map(|g| aggregate_meeting(g)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub measure: String,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when n = 1.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    /// Set when the standard deviation is undefined and reported as 0.
    pub sd_undefined: bool,
}

pub fn summary_stats(measure: &str, values: &[f64]) -> Result<SummaryRow> {
    if values.is_empty() {
        return Err(Error::EmptyAggregation(format!("{measure}: no values")));
    }
    let n = values.len();
    let mean = if values.iter().all(|&x| x == values[0]) {
        values[0]
    } else {
        values.iter().sum::<f64>() / n as f64
    };
    let (sd, sd_undefined) = if n == 1 {
        (0.0, true)
    } else {
        let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
        ((ss / (n - 1) as f64).sqrt(), false)
    };
    Ok(SummaryRow {
        measure: measure.to_string(),
        mean,
        sd,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        n,
        sd_undefined,
    })
}

/// Rows `hd_ij`, `v_ij`, `HD_i`, `V_i` in that order.
pub fn summary_table(obs: &[DissentObservation], meetings: &[MeetingDissent]) -> Result<Vec<SummaryRow>> {
    let hd: Vec<f64> = obs.iter().map(|o| o.hd).collect();
    let v: Vec<f64> = obs.iter().map(|o| f64::from(o.v)).collect();
    let mhd: Vec<f64> = meetings.iter().map(|m| m.hd).collect();
    let mv: Vec<f64> = meetings.iter().map(|m| m.v).collect();
    Ok(vec![
        summary_stats("hd_ij", &hd)?,
        summary_stats("v_ij", &v)?,
        summary_stats("HD_i", &mhd)?,
        summary_stats("V_i", &mv)?,
    ])
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T], header: &[&str]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(header).map_err(|e| Error::Data(e.to_string()))?;
    }
    for r in rows {
        wtr.serialize(r).map_err(|e| Error::Data(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Data(e.to_string()))
}

/// Columns `meeting_id,date,member_id,hd,v`.
pub fn write_panel_csv<W: Write>(w: W, obs: &[DissentObservation]) -> Result<()> {
    write_rows(w, obs, &["meeting_id", "date", "member_id", "hd", "v"])
}

/// Columns `meeting_id,date,HD,V,n_members`.
pub fn write_meetings_csv<W: Write>(w: W, meetings: &[MeetingDissent]) -> Result<()> {
    write_rows(w, meetings, &["meeting_id", "date", "HD", "V", "n_members"])
}

/// Columns `measure,mean,sd,min,max,n,sd_undefined`.
pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    write_rows(w, rows, &["measure", "mean", "sd", "min", "max", "n", "sd_undefined"])
}

/// Reads a member-level panel written by [`write_panel_csv`].
pub fn read_panel_csv<R: Read>(r: R) -> Result<Vec<DissentObservation>> {
    let mut rdr = csv::Reader::from_reader(r);
    let rows: Vec<DissentObservation> = rdr
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Data(format!("panel row {}: {e}", i + 2))))
        .collect::<Result<_>>()?;
    for o in &rows {
        if !(o.hd > 0.0 && o.hd < 1.0) || o.v > 1 {
            return Err(Error::Data(format!("{}/{}: hd {} or v {} out of range", o.meeting_id, o.member_id, o.hd, o.v)));
        }
    }
    Ok(rows)
}

/// Reads meeting-level measures written by [`write_meetings_csv`].
pub fn read_meetings_csv<R: Read>(r: R) -> Result<Vec<MeetingDissent>> {
    let mut rdr = csv::Reader::from_reader(r);
    let rows: Vec<MeetingDissent> = rdr
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Data(format!("meetings row {}: {e}", i + 2))))
        .collect::<Result<_>>()?;
    for m in &rows {
        if !(m.hd > 0.0 && m.hd < 1.0) || !(0.0..=1.0).contains(&m.v) {
            return Err(Error::Data(format!("{}: HD {} or V {} out of range", m.meeting_id, m.hd, m.v)));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(meeting: &str, hd: f64, v: u8) -> DissentObservation {
        DissentObservation {
            meeting_id: meeting.into(),
            date: meeting_date(meeting).unwrap(),
            member_id: format!("m{hd}"),
            hd,
            v,
        }
    }

    #[test]
    fn meeting_mean() {
        let m = aggregate_meeting(&[obs("2001-01-31", 0.2, 0), obs("2001-01-31", 0.4, 0)]).unwrap();
        assert!((m.hd - 0.3).abs() < 1e-15);
        let m = aggregate_meeting(&[obs("2001-01-31", 0.2, 0), obs("2001-01-31", 0.4, 0), obs("2001-01-31", 0.5, 1)])
            .unwrap();
        assert!((m.v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_meeting_is_an_error() {
        assert!(matches!(aggregate_meeting(&[]), Err(Error::EmptyAggregation(_))));
    }

    #[test]
    fn degenerate_sd() {
        let s = summary_stats("x", &[0.4]).unwrap();
        assert_eq!((s.sd, s.sd_undefined), (0.0, true));
        let s = summary_stats("x", &[0.4; 6]).unwrap();
        assert_eq!((s.sd, s.sd_undefined), (0.0, false));
    }

    #[test]
    fn panel_csv_round_trip() {
        let rows = vec![obs("2001-01-31", 0.25, 0), obs("2001-03-20", 0.75, 1)];
        let mut buf = Vec::new();
        write_panel_csv(&mut buf, &rows).unwrap();
        assert!(buf.starts_with(b"meeting_id,date,member_id,hd,v\n"));
        assert_eq!(read_panel_csv(buf.as_slice()).unwrap(), rows);
    }
}
