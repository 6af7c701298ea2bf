//! Annotation CSV: one row per speech interval.
//!
//! ```text
//! audio_path,speaker_id,word_id,ts_ms,te_ms,window_start_ms,window_end_ms
//! ```
//!
//! `ts_ms`/`te_ms` may be empty at predict time. Paths are resolved relative
//! to the CSV's directory. Fields must not contain commas.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{CliError, Result};

pub const ANNOTATION_HEADER: &str =
    "audio_path,speaker_id,word_id,ts_ms,te_ms,window_start_ms,window_end_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub audio_path: String,
    pub speaker: String,
    pub word: String,
    pub onset_ms: Option<f64>,
    pub offset_ms: Option<f64>,
    pub window_start_ms: f64,
    pub window_end_ms: f64,
}

impl AnnotationRecord {
    pub fn has_gold(&self) -> bool {
        self.onset_ms.is_some() && self.offset_ms.is_some()
    }

    fn validate(&self, row: usize) -> Result<()> {
        let at = |msg: String| CliError::data(format!("annotation row {row}: {msg}"));
        if self.window_start_ms >= self.window_end_ms {
            return Err(at(format!(
                "window [{}, {}] is empty or inverted",
                self.window_start_ms, self.window_end_ms
            )));
        }
        if let (Some(ts), Some(te)) = (self.onset_ms, self.offset_ms) {
            if ts >= te {
                return Err(at(format!("gold boundaries inverted: {ts} >= {te}")));
            }
            if ts < self.window_start_ms || te > self.window_end_ms {
                return Err(at(format!(
                    "gold ({ts}, {te}) outside window [{}, {}]",
                    self.window_start_ms, self.window_end_ms
                )));
            }
        }
        Ok(())
    }
}

fn parse_opt_f64(field: &str, what: &str, row: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse::<f64>().map(Some).map_err(|_| {
        CliError::data(format!("annotation row {row}: bad {what} value `{field}`"))
    })
}

fn parse_f64(field: &str, what: &str, row: usize) -> Result<f64> {
    parse_opt_f64(field, what, row)?
        .ok_or_else(|| CliError::data(format!("annotation row {row}: missing {what}")))
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == ANNOTATION_HEADER => {}
        other => {
            return Err(CliError::data(format!(
                "{}: expected header `{ANNOTATION_HEADER}`, found `{}`",
                path.display(),
                other.unwrap_or("")
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2; // 1-based, after header
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CliError::data(format!(
                "annotation row {row}: expected 7 fields, found {}",
                fields.len()
            )));
        }
        let rec = AnnotationRecord {
            audio_path: fields[0].to_string(),
            speaker: fields[1].to_string(),
            word: fields[2].to_string(),
            onset_ms: parse_opt_f64(fields[3], "ts_ms", row)?,
            offset_ms: parse_opt_f64(fields[4], "te_ms", row)?,
            window_start_ms: parse_f64(fields[5], "window_start_ms", row)?,
            window_end_ms: parse_f64(fields[6], "window_end_ms", row)?,
        };
        rec.validate(row)?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(CliError::data(format!(
            "{}: no annotation rows",
            path.display()
        )));
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    let mut text = String::from(ANNOTATION_HEADER);
    text.push('\n');
    for (i, r) in records.iter().enumerate() {
        for field in [&r.audio_path, &r.speaker, &r.word] {
            if field.contains(',') {
                return Err(CliError::data(format!(
                    "annotation row {}: field `{field}` contains a comma",
                    i + 2
                )));
            }
        }
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            r.audio_path,
            r.speaker,
            r.word,
            fmt_opt(r.onset_ms),
            fmt_opt(r.offset_ms),
            r.window_start_ms,
            r.window_end_ms
        );
    }
    fs::write(path, text)
        .map_err(|e| CliError::internal(format!("write {}: {e}", path.display())))
}

/// Resolve a record's audio path relative to the annotation file.
pub fn resolve_audio_path(annotations_path: &Path, record: &AnnotationRecord) -> PathBuf {
    let p = Path::new(&record.audio_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        annotations_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(p)
    }
}
