//! Run configuration: documented defaults, an optional flat `key = value`
//! config file, and CLI-flag overrides applied on top. Unknown keys are
//! rejected so typos fail loudly.

use std::path::Path;

use preasp_core::frame_model::{DecodeConfig, FrameTrainConfig};
use preasp_core::structured::{CandidateConstraints, StructuredTrainConfig};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Structured,
    Frame,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "structured" => Ok(ModelKind::Structured),
            "frame" => Ok(ModelKind::Frame),
            other => Err(format!("unknown model `{other}` (structured|frame)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub seed: u64,
    pub val_fraction: f64,
    pub jobs: usize,
    // structured model
    pub c: f64,
    pub epsilon_ms: f64,
    pub min_dur_ms: usize,
    pub max_dur_ms: usize,
    pub pa_max_epochs: usize,
    pub pa_patience: usize,
    pub average_weights: bool,
    // frame model
    pub learning_rate: f64,
    pub batch_size: usize,
    pub frame_max_epochs: usize,
    pub frame_patience: usize,
    pub dropout_rate: f64,
    pub smooth_ms: usize,
    pub threshold: f64,
    // acoustics
    pub voicing_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Structured,
            seed: 42,
            val_fraction: 0.15,
            jobs: 1,
            c: 50.0,
            epsilon_ms: 2.0,
            min_dur_ms: 5,
            max_dur_ms: 150,
            pa_max_epochs: 50,
            pa_patience: 10,
            average_weights: false,
            learning_rate: 0.01,
            batch_size: 32,
            frame_max_epochs: 150,
            frame_patience: 10,
            dropout_rate: 0.3,
            smooth_ms: 9,
            threshold: 0.5,
            voicing_threshold: 0.45,
        }
    }
}

impl RunConfig {
    /// Parse a flat `key = value` file ('#' starts a comment). Every key has
    /// a default; unknown keys are errors.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "{} line {}: expected `key = value`, found `{raw}`",
                    path.display(),
                    i + 1
                ))
            })?;
            self.set(key.trim(), value.trim()).map_err(|msg| {
                CliError::usage(format!("{} line {}: {msg}", path.display(), i + 1))
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("bad value `{value}` for {key}"))
        }
        match key {
            "model" => self.model = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "val_fraction" => self.val_fraction = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "c" => self.c = parse(key, value)?,
            "epsilon_ms" => self.epsilon_ms = parse(key, value)?,
            "min_dur_ms" => self.min_dur_ms = parse(key, value)?,
            "max_dur_ms" => self.max_dur_ms = parse(key, value)?,
            "pa_max_epochs" => self.pa_max_epochs = parse(key, value)?,
            "pa_patience" => self.pa_patience = parse(key, value)?,
            "average_weights" => self.average_weights = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "frame_max_epochs" => self.frame_max_epochs = parse(key, value)?,
            "frame_patience" => self.frame_patience = parse(key, value)?,
            "dropout_rate" => self.dropout_rate = parse(key, value)?,
            "smooth_ms" => self.smooth_ms = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "voicing_threshold" => self.voicing_threshold = parse(key, value)?,
            other => return Err(format!("unknown config key `{other}`")),
        }
        Ok(())
    }

    pub fn constraints(&self) -> CandidateConstraints {
        CandidateConstraints {
            min_dur_ms: self.min_dur_ms,
            max_dur_ms: self.max_dur_ms,
        }
    }

    pub fn structured_train_config(&self) -> StructuredTrainConfig {
        StructuredTrainConfig {
            aggressiveness: self.c,
            epsilon_ms: self.epsilon_ms,
            constraints: self.constraints(),
            max_epochs: self.pa_max_epochs,
            patience: self.pa_patience,
            seed: self.seed,
            average_weights: self.average_weights,
            ..Default::default()
        }
    }

    pub fn frame_train_config(&self) -> FrameTrainConfig {
        FrameTrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.frame_max_epochs,
            patience: self.frame_patience,
            dropout_rate: self.dropout_rate,
            seed: self.seed,
            decode: DecodeConfig {
                smooth_ms: self.smooth_ms,
                threshold: self.threshold,
            },
        }
    }

    pub fn feature_config(&self) -> preasp_core::acoustics::FeatureConfig {
        preasp_core::acoustics::FeatureConfig {
            voicing_threshold: self.voicing_threshold,
            ..Default::default()
        }
    }
}
