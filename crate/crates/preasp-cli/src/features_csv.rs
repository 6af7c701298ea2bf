//! Per-frame feature dump.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use preasp_core::acoustics::{FeatureSequence, FEATURE_DIM};

use crate::{CliError, Result};

pub const FEATURES_HEADER: &str = "frame_ms,E_total,E_low,E_high,H_wiener,P_max,R_l,V,ZC";

pub fn write_features(path: &Path, features: &FeatureSequence) -> Result<()> {
    let mut text = String::from(FEATURES_HEADER);
    text.push('\n');
    for (t, row) in features.rows().iter().enumerate() {
        let _ = write!(text, "{t}");
        for j in 0..FEATURE_DIM {
            let _ = write!(text, ",{}", row[j]);
        }
        text.push('\n');
    }
    fs::write(path, text)
        .map_err(|e| CliError::internal(format!("write {}: {e}", path.display())))
}
