//! Predictions CSV.
//!
//! ```text
//! example_id,pred_ts_ms,pred_te_ms,gold_ts_ms,gold_te_ms
//! ```
//!
//! A row with empty prediction fields records a per-example failure (the
//! audio could not be processed); record order always mirrors the input
//! annotations.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{CliError, Result};

pub const PREDICTION_HEADER: &str = "example_id,pred_ts_ms,pred_te_ms,gold_ts_ms,gold_te_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub example_id: String,
    pub pred: Option<(f64, f64)>,
    pub gold: Option<(f64, f64)>,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == PREDICTION_HEADER => {}
        other => {
            return Err(CliError::data(format!(
                "{}: expected header `{PREDICTION_HEADER}`, found `{}`",
                path.display(),
                other.unwrap_or("")
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::data(format!(
                "prediction row {row}: expected 5 fields, found {}",
                fields.len()
            )));
        }
        let pair = |a: &str, b: &str, what: &str| -> Result<Option<(f64, f64)>> {
            match (a.is_empty(), b.is_empty()) {
                (true, true) => Ok(None),
                (false, false) => {
                    let x = a.parse::<f64>().map_err(|_| {
                        CliError::data(format!("prediction row {row}: bad {what} `{a}`"))
                    })?;
                    let y = b.parse::<f64>().map_err(|_| {
                        CliError::data(format!("prediction row {row}: bad {what} `{b}`"))
                    })?;
                    Ok(Some((x, y)))
                }
                _ => Err(CliError::data(format!(
                    "prediction row {row}: half-empty {what} pair"
                ))),
            }
        };
        out.push(PredictionRecord {
            example_id: fields[0].to_string(),
            pred: pair(fields[1], fields[2], "prediction")?,
            gold: pair(fields[3], fields[4], "gold")?,
        });
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut text = String::from(PREDICTION_HEADER);
    text.push('\n');
    for r in records {
        let (p0, p1) = match r.pred {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        let (g0, g1) = match r.gold {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(text, "{},{p0},{p1},{g0},{g1}", r.example_id);
    }
    fs::write(path, text)
        .map_err(|e| CliError::internal(format!("write {}: {e}", path.display())))
}
