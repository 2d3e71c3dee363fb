//! Report rendering and emission.
//!
//! JSON carries the full report structure and round-trips exactly (floats
//! are written shortest-round-trip, so re-parsing reproduces the same bit
//! patterns). CSV is one row per case with a fixed header — an empty case
//! list yields the header alone. Text is a human summary. CSV and text
//! print floats with 17 significant digits.

use std::io::Write;
use std::path::Path;

use cmeig_core::harness::{CalibrationRecord, VerificationReport};

/// 17 significant digits: one integer digit plus 16 fractional, enough to
/// reproduce any finite f64 exactly on re-parse.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_json(report: &VerificationReport) -> String {
    let mut s =
        serde_json::to_string_pretty(report).expect("verification reports always serialize");
    s.push('\n');
    s
}

pub fn render_csv(report: &VerificationReport) -> String {
    let mut out = String::from("suite,case_index,residual,tolerance,pass\n");
    for case in &report.cases {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            report.suite_name,
            case.case_index,
            fmt_f64(case.residual),
            fmt_f64(case.tolerance),
            case.pass
        ));
    }
    out
}

fn calibration_block(record: &CalibrationRecord, out: &mut String) {
    out.push_str(&format!(
        "calibration: a = {}, m = {}, {} probes, spread tolerance {}\n",
        fmt_f64(record.a),
        record.m,
        record.probe_count,
        fmt_f64(record.spread_tolerance)
    ));
    for cand in &record.candidates {
        out.push_str(&format!(
            "  {}{}: mean ratio {} + {} i, relative spread {}, unit deviation {}, constant ratio: {}\n",
            cand.name,
            if cand.selected { " [selected]" } else { "" },
            fmt_f64(cand.mean_ratio_re),
            fmt_f64(cand.mean_ratio_im),
            fmt_f64(cand.relative_spread),
            fmt_f64(cand.unit_deviation),
            cand.constant_ratio
        ));
    }
    match &record.selected {
        Some(name) => out.push_str(&format!("selected convention: {name}\n")),
        None => out
            .push_str("selected convention: none (no candidate passed both calibration stages)\n"),
    }
}

pub fn render_text(report: &VerificationReport) -> String {
    let total = report.cases.len();
    let passed = report.cases.iter().filter(|c| c.pass).count();
    let max_residual = report
        .cases
        .iter()
        .map(|c| c.residual)
        .fold(0.0_f64, f64::max);

    let mut out = String::new();
    out.push_str(&format!(
        "suite {}: {passed}/{total} cases passed\n",
        report.suite_name
    ));
    if total > 0 {
        out.push_str(&format!("max residual: {}\n", fmt_f64(max_residual)));
    }
    if let Some(record) = &report.calibration {
        calibration_block(record, &mut out);
    }
    if let Some(diag) = &report.ratio_diagnostics {
        out.push_str(&format!(
            "ratio diagnostics: mean {} + {} i, relative spread {}\n",
            fmt_f64(diag.mean_ratio_re),
            fmt_f64(diag.mean_ratio_im),
            fmt_f64(diag.relative_spread)
        ));
    }
    for case in report.cases.iter().filter(|c| !c.pass) {
        out.push_str(&format!(
            "case {} FAILED: residual {} exceeds tolerance {} (inputs {})\n",
            case.case_index,
            fmt_f64(case.residual),
            fmt_f64(case.tolerance),
            case.inputs_digest
        ));
    }
    out.push_str(&format!("runtime: {} ms\n", report.runtime_ms));
    out.push_str(if report.all_pass() {
        "result: PASS\n"
    } else {
        "result: FAIL\n"
    });
    out
}

pub fn render_calibration_json(record: &CalibrationRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("calibration records always serialize");
    s.push('\n');
    s
}

pub fn render_calibration_text(record: &CalibrationRecord) -> String {
    let mut out = String::new();
    calibration_block(record, &mut out);
    out
}

/// Writes to the given path, or to stdout when no path is set.
pub fn emit(rendered: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, rendered),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(rendered.as_bytes())
        }
    }
}
