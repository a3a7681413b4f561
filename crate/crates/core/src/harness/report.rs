//! Summaries of a results log: error tables and CDF plot data.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use super::metrics::Summary;
use super::LogEntry;
use crate::{Error, Result};

pub fn read_log<R: BufRead>(r: R) -> Result<Vec<LogEntry>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record(format!("log line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub scenario: String,
    pub method: String,
    pub trials: usize,
    pub failed: usize,
    pub localization: Option<Summary>,
    pub aoa: Option<Summary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub methods: Vec<MethodReport>,
    pub locations: usize,
    pub dropped: usize,
}

pub fn summarize(entries: &[LogEntry]) -> Report {
    let mut groups: BTreeMap<(String, String), (usize, usize, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let (mut locations, mut dropped) = (0, 0);
    for e in entries {
        match e {
            LogEntry::Trial(t) => {
                let g = groups.entry((t.scenario.clone(), t.method.clone())).or_default();
                g.0 += 1;
                match t.error_m {
                    Some(err) => g.2.push(err),
                    None => g.1 += 1,
                }
                g.3.extend(t.aps.iter().filter_map(|a| a.aoa_error_deg));
            }
            LogEntry::Location(_) => locations += 1,
            LogEntry::Dropped(_) => dropped += 1,
        }
    }
    let methods = groups
        .into_iter()
        .map(|((scenario, method), (trials, failed, loc, aoa))| MethodReport {
            scenario,
            method,
            trials,
            failed,
            localization: Summary::new(&loc).ok(),
            aoa: Summary::new(&aoa).ok(),
        })
        .collect();
    Report {
        methods,
        locations,
        dropped,
    }
}

fn cell(s: &Option<Summary>, f: impl Fn(&Summary) -> f64) -> String {
    s.as_ref().map_or_else(|| "-".into(), |s| format!("{:.3}", f(s)))
}

/// Fixed-width table of medians and 80th percentiles.
pub fn write_table<W: Write>(report: &Report, mut w: W) -> Result<()> {
    writeln!(
        w,
        "{:<16} {:<20} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "scenario", "method", "trials", "failed", "loc_med_m", "loc_p80_m", "aoa_med", "aoa_p80"
    )?;
    for m in &report.methods {
        writeln!(
            w,
            "{:<16} {:<20} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10}",
            m.scenario,
            m.method,
            m.trials,
            m.failed,
            cell(&m.localization, |s| s.median),
            cell(&m.localization, |s| s.p80),
            cell(&m.aoa, |s| s.median),
            cell(&m.aoa, |s| s.p80),
        )?;
    }
    if report.locations + report.dropped > 0 {
        writeln!(w, "service: {} location(s), {} dropped", report.locations, report.dropped)?;
    }
    Ok(())
}

/// CDF points as CSV: `scenario,method,metric,value,fraction`.
pub fn write_cdf_csv<W: Write>(report: &Report, mut w: W) -> Result<()> {
    writeln!(w, "scenario,method,metric,value,fraction")?;
    for m in &report.methods {
        for (metric, s) in [("localization_m", &m.localization), ("aoa_deg", &m.aoa)] {
            if let Some(s) = s {
                for (v, f) in &s.cdf {
                    writeln!(w, "{},{},{metric},{v},{f}", m.scenario, m.method)?;
                }
            }
        }
    }
    Ok(())
}
