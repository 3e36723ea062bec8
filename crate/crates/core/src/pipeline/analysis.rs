//! Regression tables built from the scored panel: member- and meeting-level
//! drivers of dissent, SEP disagreement and policy-perturbation links.

use std::collections::BTreeMap;
use std::fs::File;

use chrono::NaiveDate;
use serde::Serialize;

use super::commands::{meetings_input, Run};
use crate::corpus::{load_opp, load_profiles, load_sep, load_tealbook, load_votes, meeting_on_or_before, Gender, Party, Region};
use crate::covariates::{meeting_covariates, pca, sep_measures, write_covariates_csv, write_pca_csv, MeasureMatrix, MeetingCovariates, PcaResult, DAYS_PER_YEAR};
use crate::dissent::{read_panel_csv, MeetingDissent};
use crate::econ::{
    beta_regression, check_rank, dml_effect, fractional_logit, ols_robust, pseudo_r2, random_intercept, write_columns_csv,
    write_columns_text, Design, Family, FitResult, MixedOptions, PseudoR2, TableColumn,
};
use crate::error::{Error, Result};
use crate::seed;

const MACRO: [&str; 4] = ["T_unemp", "D_unemp", "T_cpi", "D_cpi"];

type Column = (String, Vec<f64>);

/// Builds `[const, columns]`, dropping constant columns, then columns that
/// are linear in earlier ones, then trailing columns until n > p + 1.
/// Every drop is noted.
fn pruned_design(y: &[f64], mut cols: Vec<Column>, clusters: Option<&[String]>, notes: &mut Vec<String>) -> Result<Design> {
    cols.retain(|(name, c)| {
        let constant = c.iter().all(|v| *v == c[0]);
        if constant {
            notes.push(format!("dropped {name}: constant in this sample"));
        }
        !constant
    });
    while cols.len() + 2 > y.len() && !cols.is_empty() {
        let (name, _) = cols.pop().expect("non-empty");
        notes.push(format!("dropped {name}: too few observations ({})", y.len()));
    }
    loop {
        let refs: Vec<(&str, Vec<f64>)> = cols.iter().map(|(n, c)| (n.as_str(), c.clone())).collect();
        let mut d = Design::with_intercept(y.to_vec(), &refs)?;
        if let Some(c) = clusters {
            d = d.with_clusters(c)?;
        }
        match check_rank(&d.x, &d.names) {
            Ok(()) => return Ok(d),
            Err(Error::RankDeficient { columns }) if !columns.iter().any(|c| c == "const") => {
                for c in &columns {
                    notes.push(format!("dropped {c}: collinear with earlier regressors"));
                }
                cols.retain(|(n, _)| !columns.contains(n));
            }
            Err(e) => return Err(e),
        }
    }
}

fn f4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "n/a".into()
    }
}

fn pseudo_stats(fit: &FitResult, null: &FitResult) -> Vec<(String, String)> {
    let get = |k| pseudo_r2(fit, null, k).map_or("n/a".to_string(), f4);
    vec![
        ("Pseudo R2 (McFadden)".into(), get(PseudoR2::McFadden)),
        ("Pseudo R2 (sq. corr.)".into(), get(PseudoR2::SquaredCorrelation)),
        ("Log likelihood".into(), f4(fit.log_likelihood)),
        ("N".into(), fit.n.to_string()),
    ]
}

fn mixed_stats(fit: &FitResult) -> Vec<(String, String)> {
    vec![
        ("Log likelihood".into(), f4(fit.log_likelihood)),
        ("Random-intercept variance".into(), fit.aux.get("sigma_u2").map_or("n/a".into(), |v| f4(*v))),
        ("N".into(), fit.n.to_string()),
        ("Members".into(), fit.n_clusters.map_or("n/a".into(), |g| g.to_string())),
    ]
}

#[derive(Debug, Default, Serialize)]
struct Notes(BTreeMap<String, Vec<String>>);

impl Notes {
    fn add(&mut self, label: &str, pruning: Vec<String>, fit: &FitResult) {
        let mut all = pruning;
        all.extend(fit.notes.iter().cloned());
        if !all.is_empty() {
            self.0.insert(label.to_string(), all);
        }
    }
}

fn write_table(r: &mut Run, stem: &str, title: &str, columns: &[TableColumn]) -> Result<()> {
    write_columns_csv(r.create(&format!("{stem}.csv"))?, columns)?;
    let mut text = Vec::new();
    write_columns_text(&mut text, title, columns)?;
    r.write_text(&format!("{stem}.txt"), &String::from_utf8(text).expect("table text is UTF-8"))
}

fn macro_row(c: &MeetingCovariates) -> Option<[f64; 4]> {
    Some([c.t_unemp?, c.d_unemp?, c.t_cpi?, c.d_cpi?])
}

fn years(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / DAYS_PER_YEAR
}

fn push_columns(cols: &mut Vec<Column>, names: &[&str], row: &[f64]) {
    if cols.is_empty() {
        cols.extend(names.iter().map(|n| (n.to_string(), Vec::new())));
    }
    for (c, v) in cols.iter_mut().zip(row) {
        c.1.push(*v);
    }
}

const PERSONAL: [&str; 13] = [
    "age",
    "experience",
    "female",
    "econ_major",
    "school_wealth_musd",
    "school_ne",
    "school_south",
    "school_west",
    "great_depression",
    "great_inflation",
    "wwii",
    "appt_dem",
    "hometown_oth",
];

const COMPOSITION: [&str; 13] = [
    "D_experience",
    "D_age",
    "D_schoolwealth_musd",
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

fn composition_row(c: &MeetingCovariates) -> [f64; 13] {
    let m = &c.composition;
    [
        m.d_experience,
        m.d_age,
        m.d_schoolwealth / 1e6,
        m.p_gender,
        m.p_major,
        m.p_depression,
        m.p_inflation,
        m.p_wwii,
        m.p_apptdem,
        m.e_hometown,
        m.e_school,
        m.e_potus,
        f64::from(c.incumbent_dem),
    ]
}

/// Member-level random-intercept models and meeting-level beta /
/// fractional-logit models on forecast and composition regressors.
pub(crate) fn analyze_panel(r: &mut Run) -> Result<()> {
    let d = r.cfg.data.clone();
    let panel_path = r.input_path(r.cfg.panel_path());
    let obs = read_panel_csv(File::open(&panel_path).map_err(|e| Error::io(&panel_path, e))?)?;
    let meetings = meetings_input(r)?;
    let records = load_votes(&r.input("votes", &d.votes)?)?;
    let profiles = load_profiles(&r.input("profiles", &d.profiles)?)?;
    let tealbook = load_tealbook(&r.input("tealbook", &d.tealbook)?)?;
    let covs = meeting_covariates(&records, &profiles, &tealbook)?;
    write_covariates_csv(r.create("covariates.csv")?, &covs)?;
    let by_meeting: BTreeMap<&str, &MeetingCovariates> = covs.iter().map(|c| (c.meeting_id.as_str(), c)).collect();
    let mut notes = Notes::default();
    let opts = MixedOptions { nodes: r.cfg.panel.quadrature_nodes, ..MixedOptions::default() };

    // member level
    let (mut hd, mut v, mut members) = (Vec::new(), Vec::new(), Vec::new());
    let (mut macro_cols, mut personal_cols): (Vec<Column>, Vec<Column>) = (Vec::new(), Vec::new());
    for o in &obs {
        let Some(m) = by_meeting.get(o.meeting_id.as_str()).and_then(|c| macro_row(c)) else {
            continue;
        };
        let p = profiles
            .get(&o.member_id)
            .ok_or_else(|| Error::Data(format!("{}: scored member has no profile", o.member_id)))?;
        let flag = |b: bool| f64::from(u8::from(b));
        let personal = [
            years(p.birth_date, o.date),
            years(p.term_start, o.date),
            flag(p.gender == Gender::F),
            flag(p.econ_major),
            p.school_wealth / 1e6,
            flag(p.school_region == Region::NE),
            flag(p.school_region == Region::South),
            flag(p.school_region == Region::West),
            flag(p.great_depression),
            flag(p.great_inflation),
            flag(p.wwii),
            flag(p.appt_party == Party::Dem),
            flag(p.hometown_region == Region::OTH),
        ];
        hd.push(o.hd);
        v.push(f64::from(o.v));
        members.push(o.member_id.clone());
        push_columns(&mut macro_cols, &MACRO, &m);
        push_columns(&mut personal_cols, &PERSONAL, &personal);
    }
    if hd.is_empty() {
        return Err(Error::InsufficientData("no scored member has staff forecasts for the meeting".into()));
    }
    let full: Vec<Column> = macro_cols.iter().cloned().chain(personal_cols).collect();
    let mut fits = Vec::new();
    for (label, y, family, cols) in [
        ("(1) hd beta", &hd, Family::Beta, &macro_cols),
        ("(2) hd beta", &hd, Family::Beta, &full),
        ("(3) v probit", &v, Family::Probit, &macro_cols),
        ("(4) v probit", &v, Family::Probit, &full),
    ] {
        let mut pruning = Vec::new();
        let design = pruned_design(y, cols.clone(), Some(&members), &mut pruning)?;
        let fit = random_intercept(&design, family, opts)?;
        notes.add(&format!("member {label}"), pruning, &fit);
        fits.push((label, fit));
    }
    let columns: Vec<TableColumn> =
        fits.iter().map(|(l, f)| TableColumn { label: l.to_string(), fit: f, stats: mixed_stats(f) }).collect();
    write_table(r, "panel_member", "Hidden dissent and NO votes, member level (random intercept by member)", &columns)?;

    // meeting level
    let (mut mhd, mut mv) = (Vec::new(), Vec::new());
    let (mut macro_cols, mut comp_cols): (Vec<Column>, Vec<Column>) = (Vec::new(), Vec::new());
    for m in &meetings {
        let Some(c) = by_meeting.get(m.meeting_id.as_str()) else {
            continue;
        };
        let Some(row) = macro_row(c) else { continue };
        mhd.push(m.hd);
        mv.push(m.v);
        push_columns(&mut macro_cols, &MACRO, &row);
        push_columns(&mut comp_cols, &COMPOSITION, &composition_row(c));
    }
    if mhd.is_empty() {
        return Err(Error::InsufficientData("no scored meeting has staff forecasts".into()));
    }
    let full: Vec<Column> = macro_cols.iter().cloned().chain(comp_cols).collect();
    let mut fits = Vec::new();
    for (label, y, beta, cols) in [
        ("(1) HD beta", &mhd, true, &macro_cols),
        ("(2) HD beta", &mhd, true, &full),
        ("(3) V fractional", &mv, false, &macro_cols),
        ("(4) V fractional", &mv, false, &full),
    ] {
        let mut pruning = Vec::new();
        let design = pruned_design(y, cols.clone(), None, &mut pruning)?;
        let est = if beta { beta_regression } else { fractional_logit };
        let fit = est(&design)?;
        let null = est(&design.intercept_only())?;
        notes.add(&format!("meeting {label}"), pruning, &fit);
        fits.push((label, fit, null));
    }
    let columns: Vec<TableColumn> = fits
        .iter()
        .map(|(l, f, n)| TableColumn { label: l.to_string(), fit: f, stats: pseudo_stats(f, n) })
        .collect();
    write_table(r, "panel_meeting", "Hidden dissent and NO-vote share, meeting level", &columns)?;
    r.write_json("panel_notes.json", &notes)
}

fn write_measures(r: &mut Run, name: &str, m: &MeasureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(r.create(name)?);
    let err = |e: csv::Error| Error::Data(e.to_string());
    let mut header = vec!["meeting_id".to_string()];
    header.extend(m.columns.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for (i, id) in m.meeting_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(m.values.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(name, e))
}

#[derive(Debug, Serialize)]
struct PcaSummary {
    columns: Vec<String>,
    dropped: Vec<String>,
    components: usize,
    eigenvalues: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
    /// Share of variance explained by the retained components.
    cumulative: f64,
}

impl PcaSummary {
    fn new(p: &PcaResult) -> Self {
        let k = p.scores.ncols();
        Self {
            columns: p.columns.clone(),
            dropped: p.dropped.clone(),
            components: k,
            eigenvalues: p.eigenvalues.clone(),
            explained_variance_ratio: p.explained_variance_ratio.clone(),
            cumulative: p.explained_variance_ratio.iter().take(k).sum(),
        }
    }
}

/// Scores of a PCA keyed by meeting.
fn scores_by_meeting(p: &PcaResult, ids: &[String]) -> BTreeMap<String, Vec<f64>> {
    ids.iter().enumerate().map(|(i, id)| (id.clone(), p.scores.row(i).iter().copied().collect())).collect()
}

/// SEP disagreement: principal components of the policy and economy
/// blocks, beta regressions of HD on them, and partialled-out effects.
pub(crate) fn analyze_sep(r: &mut Run) -> Result<()> {
    let d = r.cfg.data.clone();
    let s = r.cfg.sep;
    let snaps = load_sep(&r.input("sep", &d.sep)?)?;
    let hd: BTreeMap<String, f64> = meetings_input(r)?.into_iter().map(|m| (m.meeting_id, m.hd)).collect();
    let (policy, economy) = sep_measures(&snaps, s.center)?;
    write_measures(r, "sep_policy_measures.csv", &policy)?;
    write_measures(r, "sep_economy_measures.csv", &economy)?;
    let pp = pca(&policy.values, &policy.columns, s.policy_components)?;
    let pe = pca(&economy.values, &economy.columns, s.economy_components)?;
    write_pca_csv(r.create("sep_policy_loadings.csv")?, r.create("sep_policy_scores.csv")?, &pp, &policy.meeting_ids)?;
    write_pca_csv(r.create("sep_economy_loadings.csv")?, r.create("sep_economy_scores.csv")?, &pe, &economy.meeting_ids)?;
    let mut summary = BTreeMap::new();
    summary.insert("policy", PcaSummary::new(&pp));
    summary.insert("economy", PcaSummary::new(&pe));
    r.write_json("sep_pca.json", &summary)?;

    let ps = scores_by_meeting(&pp, &policy.meeting_ids);
    let es = scores_by_meeting(&pe, &economy.meeting_ids);
    let praw: BTreeMap<&str, usize> = policy.meeting_ids.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let eraw: BTreeMap<&str, usize> = economy.meeting_ids.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let policy_sample: Vec<&String> = policy.meeting_ids.iter().filter(|m| hd.contains_key(*m)).collect();
    let economy_sample: Vec<&String> = economy.meeting_ids.iter().filter(|m| hd.contains_key(*m)).collect();
    let joint: Vec<&String> = policy_sample.iter().copied().filter(|m| es.contains_key(*m)).collect();

    let pc_cols = |sample: &[&String], scores: &BTreeMap<String, Vec<f64>>, prefix: &str, k: usize| -> Vec<Column> {
        (0..k).map(|j| (format!("{prefix}_PC{}", j + 1), sample.iter().map(|m| scores[*m][j]).collect())).collect()
    };
    let y_of = |sample: &[&String]| -> Vec<f64> { sample.iter().map(|m| hd[*m]).collect() };
    let kp = pp.scores.ncols();
    let ke = pe.scores.ncols();
    let mut notes = Notes::default();
    let mut fits = Vec::new();
    for (label, sample, cols) in [
        ("(1)", &policy_sample, pc_cols(&policy_sample, &ps, "Policy", 1)),
        ("(2)", &policy_sample, pc_cols(&policy_sample, &ps, "Policy", kp.min(2))),
        ("(3)", &economy_sample, pc_cols(&economy_sample, &es, "Economy", ke)),
        ("(4)", &joint, pc_cols(&joint, &es, "Economy", ke)),
    ] {
        let mut pruning = Vec::new();
        let design = pruned_design(&y_of(sample), cols, None, &mut pruning)?;
        let fit = beta_regression(&design)?;
        let null = beta_regression(&design.intercept_only())?;
        notes.add(label, pruning, &fit);
        fits.push((label.to_string(), fit, null));
    }
    let y = y_of(&joint);
    let raw = |m: &MeasureMatrix, index: &BTreeMap<&str, usize>| {
        nalgebra::DMatrix::from_fn(joint.len(), m.columns.len(), |i, j| m.values[(index[joint[i].as_str()], j)])
    };
    let t_policy: Vec<f64> = joint.iter().map(|m| ps[*m][0]).collect();
    let t_economy: Vec<f64> = joint.iter().map(|m| es[*m][0]).collect();
    let folds = s.dml_folds.min(joint.len());
    let dml5 = dml_effect(&y, &t_policy, &raw(&economy, &eraw), folds, s.dml_lambda, seed::derive(r.cfg.seed, &[5, 0]))?;
    let dml6 = dml_effect(&y, &t_economy, &raw(&policy, &praw), folds, s.dml_lambda, seed::derive(r.cfg.seed, &[5, 1]))?;
    let dml_fits = [("(5) DML", dml5.as_fit("Residualized Policy_PC1")), ("(6) DML", dml6.as_fit("Residualized Economy_PC1"))];
    let mut columns: Vec<TableColumn> = fits
        .iter()
        .map(|(l, f, n)| TableColumn { label: format!("{l} HD beta"), fit: f, stats: pseudo_stats(f, n) })
        .collect();
    columns.extend(dml_fits.iter().map(|(l, f)| TableColumn {
        label: l.to_string(),
        fit: f,
        stats: vec![("N".into(), f.n.to_string())],
    }));
    write_table(r, "sep_regressions", "Hidden dissent and SEP disagreement", &columns)?;
    r.write_json("sep_notes.json", &notes)
}

/// OLS of absolute policy perturbations on the preceding meeting's HD and V,
/// on the full sample and outside the zero lower bound.
pub(crate) fn analyze_opp(r: &mut Run) -> Result<()> {
    let d = r.cfg.data.clone();
    let opp = load_opp(&r.input("opp", &d.opp)?)?;
    let mut meetings: Vec<MeetingDissent> = meetings_input(r)?;
    meetings.sort_by(|a, b| a.date.cmp(&b.date).then(a.meeting_id.cmp(&b.meeting_id)));
    let dates: Vec<NaiveDate> = meetings.iter().map(|m| m.date).collect();
    // an observation dated well past the last meeting has no preceding meeting in the panel
    let max_gap = dates.windows(2).map(|w| (w[1] - w[0]).num_days()).max().unwrap_or(0);
    let horizon = dates.last().map(|d| *d + chrono::Duration::days(max_gap));
    let matched: Vec<(_, &MeetingDissent)> = opp
        .iter()
        .filter(|o| horizon.is_some_and(|h| o.date <= h))
        .filter_map(|o| meeting_on_or_before(&dates, o.date).map(|i| (o, &meetings[i])))
        .collect();
    let mut fits = Vec::new();
    for (sample, exclude_zlb) in [("full", false), ("no_zlb", true)] {
        let rows: Vec<_> = matched.iter().filter(|(o, _)| !(exclude_zlb && o.zero_bound)).collect();
        for (name, pick) in [
            ("ffr", (|o: &crate::corpus::OppObservation| o.opp_ffr) as fn(&crate::corpus::OppObservation) -> f64),
            ("shadow", |o| o.opp_shadow),
            ("slope", |o| o.opp_slope),
        ] {
            let y: Vec<f64> = rows.iter().map(|(o, _)| pick(o).abs()).collect();
            let hd: Vec<f64> = rows.iter().map(|(_, m)| m.hd).collect();
            let v: Vec<f64> = rows.iter().map(|(_, m)| m.v).collect();
            if y.len() < 4 {
                return Err(Error::InsufficientData(format!("{} OPP observations in the {sample} sample", y.len())));
            }
            let design = Design::with_intercept(y, &[("HD", hd), ("V", v)])?;
            fits.push((format!("|OPP_{name}| {sample}"), ols_robust(&design)?));
        }
    }
    let columns: Vec<TableColumn> = fits
        .iter()
        .map(|(l, f)| TableColumn {
            label: l.clone(),
            fit: f,
            stats: vec![("Adjusted R2".into(), f.adj_r2.map_or("n/a".into(), f4)), ("N".into(), f.n.to_string())],
        })
        .collect();
    write_table(r, "opp_regressions", "Hidden dissent and absolute policy perturbations (robust SE)", &columns)
}
