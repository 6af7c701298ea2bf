//! Evaluation report rendering: a human-readable table plus machine CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use preasp_core::evaluation::EvalReport;

use crate::{CliError, Result};

pub fn render_table(label: &str, report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:12}", "");
    for th in &report.thresholds_ms {
        let _ = write!(s, "{:>7}", format!("<={th}"));
    }
    let _ = writeln!(s, " |    dTs    dTe");
    let _ = write!(s, "{label:12}");
    for pct in &report.tolerance_pct {
        let _ = write!(s, "{pct:7.1}");
    }
    let _ = writeln!(
        s,
        " | {:6.1} {:6.1}",
        report.onset_mae_ms, report.offset_mae_ms
    );
    let _ = writeln!(
        s,
        "duration (pred) mean {:.1} ms, std {:.1} ms",
        report.pred_dur_mean_ms, report.pred_dur_std_ms
    );
    let _ = writeln!(
        s,
        "duration (gold) mean {:.1} ms, std {:.1} ms",
        report.gold_dur_mean_ms, report.gold_dur_std_ms
    );
    match report.pearson_r {
        Some(r) => {
            let _ = writeln!(s, "pearson r = {:.3}  (n = {})", r, report.examples);
        }
        None => {
            let _ = writeln!(s, "pearson r undefined (n = {})", report.examples);
        }
    }
    s
}

pub const REPORT_CSV_HEADER: &str = "label,examples,le5_pct,le10_pct,le15_pct,le20_pct,\
onset_mae_ms,offset_mae_ms,pred_dur_mean_ms,pred_dur_std_ms,gold_dur_mean_ms,gold_dur_std_ms,pearson_r";

/// Full-precision CSV, one row per labeled report.
pub fn write_report_csv(path: &Path, rows: &[(String, EvalReport)]) -> Result<()> {
    let mut text = String::from(REPORT_CSV_HEADER);
    text.push('\n');
    for (label, r) in rows {
        let _ = write!(text, "{label},{}", r.examples);
        for pct in &r.tolerance_pct {
            let _ = write!(text, ",{pct}");
        }
        let _ = write!(
            text,
            ",{},{},{},{},{},{}",
            r.onset_mae_ms,
            r.offset_mae_ms,
            r.pred_dur_mean_ms,
            r.pred_dur_std_ms,
            r.gold_dur_mean_ms,
            r.gold_dur_std_ms
        );
        match r.pearson_r {
            Some(v) => {
                let _ = writeln!(text, ",{v}");
            }
            None => {
                let _ = writeln!(text, ",");
            }
        }
    }
    fs::write(path, text)
        .map_err(|e| CliError::internal(format!("write {}: {e}", path.display())))
}
