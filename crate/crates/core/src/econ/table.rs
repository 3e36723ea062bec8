use std::io::Write;

use super::FitResult;
use crate::error::{Error, Result};

/// Significance marks for p < 0.01, 0.05, 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Columns `term,estimate,std_error,z,p_value,stars`.
pub fn write_table_csv<W: Write>(w: W, fit: &FitResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Data(e.to_string());
    wtr.write_record(["term", "estimate", "std_error", "z", "p_value", "stars"]).map_err(err)?;
    for i in 0..fit.names.len() {
        let p = fit.p_value(i);
        wtr.write_record([
            fit.names[i].clone(),
            fit.coef[i].to_string(),
            fit.se[i].to_string(),
            fit.z(i).to_string(),
            p.to_string(),
            stars(p).to_string(),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Data(e.to_string()))
}

/// Aligned text: estimate with stars over its standard error in parentheses.
pub fn write_table_text<W: Write>(mut w: W, title: &str, fit: &FitResult, extra: &[(&str, String)]) -> Result<()> {
    let io = |e| Error::Data(format!("writing table: {e}"));
    let width = fit.names.iter().map(|n| n.len()).max().unwrap_or(4).max(16);
    writeln!(w, "{title}").map_err(io)?;
    writeln!(w, "{}", "-".repeat(width + 18)).map_err(io)?;
    for i in 0..fit.names.len() {
        let est = format!("{:.4}{}", fit.coef[i], stars(fit.p_value(i)));
        writeln!(w, "{:<width$} {:>16}", fit.names[i], est).map_err(io)?;
        writeln!(w, "{:<width$} {:>16}", "", format!("({:.4})", fit.se[i])).map_err(io)?;
    }
    writeln!(w, "{}", "-".repeat(width + 18)).map_err(io)?;
    writeln!(w, "{:<width$} {:>16}", "Observations", fit.n).map_err(io)?;
    writeln!(w, "{:<width$} {:>16.3}", "Log-likelihood", fit.log_likelihood).map_err(io)?;
    for (k, v) in extra {
        writeln!(w, "{:<width$} {:>16}", k, v).map_err(io)?;
    }
    writeln!(w, "Note: *** p<0.01; ** p<0.05; * p<0.1").map_err(io)
}

/// One model column of a multi-column table, with footer statistics such
/// as pseudo-R² or N.
#[derive(Debug, Clone)]
pub struct TableColumn<'a> {
    pub label: String,
    pub fit: &'a FitResult,
    pub stats: Vec<(String, String)>,
}

/// Long format `column,term,estimate,std_error,z,p_value,stars`; footer
/// statistics follow as rows with only `column`, `term` and `estimate`.
pub fn write_columns_csv<W: Write>(w: W, columns: &[TableColumn]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Data(e.to_string());
    wtr.write_record(["column", "term", "estimate", "std_error", "z", "p_value", "stars"]).map_err(err)?;
    for c in columns {
        for i in 0..c.fit.names.len() {
            let p = c.fit.p_value(i);
            wtr.write_record([
                c.label.clone(),
                c.fit.names[i].clone(),
                c.fit.coef[i].to_string(),
                c.fit.se[i].to_string(),
                c.fit.z(i).to_string(),
                p.to_string(),
                stars(p).to_string(),
            ])
            .map_err(err)?;
        }
        for (k, v) in &c.stats {
            wtr.write_record([c.label.as_str(), k, v, "", "", "", ""]).map_err(err)?;
        }
    }
    wtr.flush().map_err(|e| Error::Data(e.to_string()))
}

/// Side-by-side text table; terms appear in order of first use.
pub fn write_columns_text<W: Write>(mut w: W, title: &str, columns: &[TableColumn]) -> Result<()> {
    let io = |e| Error::Data(format!("writing table: {e}"));
    let mut terms: Vec<&str> = Vec::new();
    let mut stat_names: Vec<&str> = Vec::new();
    for c in columns {
        for n in &c.fit.names {
            if !terms.contains(&n.as_str()) {
                terms.push(n);
            }
        }
        for (k, _) in &c.stats {
            if !stat_names.contains(&k.as_str()) {
                stat_names.push(k);
            }
        }
    }
    let width = terms.iter().chain(&stat_names).map(|n| n.len()).max().unwrap_or(4).max(16);
    let cw = columns.iter().map(|c| c.label.len()).max().unwrap_or(0).max(14);
    let rule = "-".repeat(width + columns.len() * (cw + 1));
    writeln!(w, "{title}").map_err(io)?;
    writeln!(w, "{rule}").map_err(io)?;
    write!(w, "{:<width$}", "").map_err(io)?;
    for c in columns {
        write!(w, " {:>cw$}", c.label).map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    writeln!(w, "{rule}").map_err(io)?;
    for t in &terms {
        let (mut est, mut se) = (format!("{t:<width$}"), format!("{:<width$}", ""));
        for c in columns {
            match c.fit.names.iter().position(|n| n == t) {
                Some(i) => {
                    est += &format!(" {:>cw$}", format!("{:.4}{}", c.fit.coef[i], stars(c.fit.p_value(i))));
                    se += &format!(" {:>cw$}", format!("({:.4})", c.fit.se[i]));
                }
                None => {
                    est += &format!(" {:>cw$}", "");
                    se += &format!(" {:>cw$}", "");
                }
            }
        }
        writeln!(w, "{}", est.trim_end()).map_err(io)?;
        writeln!(w, "{}", se.trim_end()).map_err(io)?;
    }
    writeln!(w, "{rule}").map_err(io)?;
    for s in &stat_names {
        let mut line = format!("{s:<width$}");
        for c in columns {
            let v = c.stats.iter().find(|(k, _)| k == s).map_or("", |(_, v)| v.as_str());
            line += &format!(" {v:>cw$}");
        }
        writeln!(w, "{}", line.trim_end()).map_err(io)?;
    }
    writeln!(w, "{rule}").map_err(io)?;
    writeln!(w, "Note: *** p<0.01; ** p<0.05; * p<0.1").map_err(io)
}
