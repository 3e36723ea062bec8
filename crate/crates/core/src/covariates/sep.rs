use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::corpus::{Horizon, SepSnapshot, SepVariable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Center {
    #[default]
    Median,
    Mean,
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sum of absolute deviations of the projections from their center.
pub fn sep_disagreement(projections: &[f64], center: Center) -> Result<f64> {
    if projections.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} projection(s); at least 2 are needed",
            projections.len()
        )));
    }
    if projections.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite projection".into()));
    }
    let c = match center {
        Center::Median => median(projections),
        Center::Mean => projections.iter().sum::<f64>() / projections.len() as f64,
    };
    Ok(projections.iter().map(|x| (x - c).abs()).sum())
}

/// Rows are meetings, columns are named measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureMatrix {
    pub meeting_ids: Vec<String>,
    pub columns: Vec<String>,
    pub values: DMatrix<f64>,
}

fn column_name(v: SepVariable, h: Horizon) -> String {
    let var = match v {
        SepVariable::Ffr => "ffr",
        SepVariable::Unemployment => "unemployment",
        SepVariable::GdpGrowth => "gdp_growth",
        SepVariable::PceInflation => "pce_inflation",
        SepVariable::CorePceInflation => "core_pce_inflation",
    };
    let hz = match h {
        Horizon::Y0 => "y0",
        Horizon::Y1 => "y1",
        Horizon::Y2 => "y2",
        Horizon::LongRun => "long_run",
    };
    format!("{var}_{hz}")
}

fn measures_for(
    snapshots: &BTreeMap<(&str, SepVariable, Horizon), &[f64]>,
    meetings: &[&str],
    variables: &[SepVariable],
    center: Center,
) -> Result<MeasureMatrix> {
    let cells: Vec<(SepVariable, Horizon)> = variables
        .iter()
        .flat_map(|&v| Horizon::ALL.into_iter().filter(move |&h| h != Horizon::LongRun || v.has_long_run()).map(move |h| (v, h)))
        .collect();
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for &m in meetings {
        let row: Option<Vec<&[f64]>> = cells.iter().map(|&(v, h)| snapshots.get(&(m, v, h)).copied()).collect();
        if let Some(row) = row {
            for p in row {
                data.push(sep_disagreement(p, center)?);
            }
            ids.push(m.to_string());
        }
    }
    Ok(MeasureMatrix {
        values: DMatrix::from_row_slice(ids.len(), cells.len(), &data),
        meeting_ids: ids,
        columns: cells.iter().map(|&(v, h)| column_name(v, h)).collect(),
    })
}

/// Disagreement measures per meeting: the policy block (funds rate at the
/// four horizons) and the economy block (unemployment and GDP growth at
/// four horizons, both inflation measures at three). Meetings lacking any
/// cell of a block are left out of that block.
pub fn sep_measures(snapshots: &[SepSnapshot], center: Center) -> Result<(MeasureMatrix, MeasureMatrix)> {
    let mut map = BTreeMap::new();
    for s in snapshots {
        if s.horizon == Horizon::LongRun && !s.variable.has_long_run() {
            return Err(Error::Data(format!("{}: inflation projections have no long-run horizon", s.meeting_id)));
        }
        map.insert((s.meeting_id.as_str(), s.variable, s.horizon), s.projections.as_slice());
    }
    let mut meetings: Vec<&str> = map.keys().map(|k| k.0).collect();
    meetings.dedup();
    let policy = measures_for(&map, &meetings, &[SepVariable::Ffr], center)?;
    let economy = measures_for(
        &map,
        &meetings,
        &[
            SepVariable::Unemployment,
            SepVariable::GdpGrowth,
            SepVariable::PceInflation,
            SepVariable::CorePceInflation,
        ],
        center,
    )?;
    Ok((policy, economy))
}
