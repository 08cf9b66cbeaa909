//! CSV serialization of case runs.
//!
//! Time-series files hold one row per grid time with columns
//! `t, frame, p_0 … p_{D−1}, gamma, eta, i_mean`, followed for each observer
//! `X` by `error_lower_X, error_upper_X, error_trivial_X, holevo_X, qmi_X`.
//! Numbers use the shortest representation that round-trips.

use std::io::Write;

use super::runner::{CaseRun, REPORT_FRAMES};
use crate::error::Result;
use crate::metrics::SbsReport;

/// Version of the CSV layouts below.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn series_file_name(case: &str, frame: &str) -> String {
    format!("case-{case}_frame-{frame}.csv")
}

pub fn fidelity_file_name(case: &str) -> String {
    format!("case-{case}_fidelity.csv")
}

pub fn saturation_file_name(case: &str) -> String {
    format!("case-{case}_saturation.csv")
}

fn header(report: &SbsReport) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "frame".to_string()];
    cols.extend((0..report.spectrum.len()).map(|k| format!("p_{k}")));
    cols.extend(["gamma", "eta", "i_mean"].map(String::from));
    for o in &report.observers {
        for name in [
            "error_lower",
            "error_upper",
            "error_trivial",
            "holevo",
            "qmi",
        ] {
            cols.push(format!("{name}_{}", o.label));
        }
    }
    cols
}

fn row(t: f64, report: &SbsReport) -> Vec<String> {
    let mut cells = vec![t.to_string(), report.frame.clone()];
    cells.extend(report.spectrum.iter().map(f64::to_string));
    cells.push(report.gamma.to_string());
    cells.push(report.eta.to_string());
    cells.push(report.i_mean.map(|v| v.to_string()).unwrap_or_default());
    for o in &report.observers {
        cells.push(o.bounds.lower.to_string());
        cells.push(o.bounds.upper.to_string());
        cells.push(o.bounds.trivial().to_string());
        cells.push(o.holevo.to_string());
        cells.push(o.qmi.to_string());
    }
    cells
}

/// Time series of one frame.
pub fn write_series(run: &CaseRun, frame: &str, out: &mut impl Write) -> Result<()> {
    let reports: Vec<(f64, &SbsReport)> = run
        .points
        .iter()
        .filter_map(|p| Some((p.t, p.report(frame)?)))
        .collect();
    if let Some((_, first)) = reports.first() {
        writeln!(out, "{}", header(first).join(","))?;
    }
    for (t, r) in reports {
        writeln!(out, "{}", row(t, r).join(","))?;
    }
    Ok(())
}

/// Conditional fidelity tables in long form: `t, frame, observer, i, j, B`.
pub fn write_fidelities(run: &CaseRun, out: &mut impl Write) -> Result<()> {
    writeln!(out, "t,frame,observer,i,j,B")?;
    for p in &run.points {
        for frame in REPORT_FRAMES {
            let Some(r) = p.report(frame) else { continue };
            for o in &r.observers {
                for (i, row) in o.fidelity.iter().enumerate() {
                    for (j, b) in row.iter().enumerate().skip(i + 1) {
                        writeln!(out, "{},{},{},{i},{j},{b}", p.t, frame, o.label)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Plateau statistics per frame.
pub fn write_saturation(run: &CaseRun, out: &mut impl Write) -> Result<()> {
    writeln!(
        out,
        "case,frame,i_sat,sigma_i,t_sat,n_window,window_start,window_end"
    )?;
    let (a, b) = run.config.saturation_window;
    for s in &run.saturation {
        writeln!(
            out,
            "{},{},{},{},{},{},{a},{b}",
            run.config.case_id,
            s.frame,
            s.stats.i_sat,
            s.stats.sigma_i,
            s.stats.t_sat,
            s.stats.n_window
        )?;
    }
    Ok(())
}
