//! Versioned text persistence for both model kinds.
//!
//! Floats are written with 17 significant decimal digits (`{:.16e}`), which
//! round-trips every finite f64 bit-exactly through the standard parser.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use preasp_core::acoustics::{NormStats, FEATURE_DIM};
use preasp_core::frame_model::{DecodeConfig, FrameNet, HIDDEN_DIM, INPUT_DIM};
use preasp_core::structured::{
    CandidateConstraints, FeatureMapSpec, MapDescriptor, StructuredModel,
};

use crate::{CliError, Result};

pub const FRAME_MAGIC: &str = "PREASP-FRAME v1";
pub const STRUCT_MAGIC: &str = "PREASP-STRUCT v1";

/// A loaded model of either kind. The frame net carries the normalization
/// stats it was trained with.
pub enum Model {
    Frame { net: FrameNet, norm: NormStats },
    Structured(StructuredModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Frame { .. } => "frame",
            Model::Structured(_) => "structured",
        }
    }
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn floats_line(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&f(*v));
    }
    s
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    at: usize,
    path: String,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        LineReader {
            lines: text.lines(),
            at: 0,
            path: path.display().to_string(),
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::data(format!("{} line {}: {msg}", self.path, self.at))
    }

    fn next(&mut self) -> Result<&'a str> {
        self.at += 1;
        self.lines
            .next()
            .ok_or_else(|| CliError::data(format!("{}: unexpected end of file", self.path)))
    }

    /// `key <value>` line.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} <value>`, found `{line}`")))
    }

    fn keyed_f64(&mut self, key: &str) -> Result<f64> {
        let v = self.keyed(key)?;
        v.parse()
            .map_err(|_| self.err(format!("bad float `{v}` for {key}")))
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let v = self.keyed(key)?;
        v.parse()
            .map_err(|_| self.err(format!("bad integer `{v}` for {key}")))
    }

    fn floats(&mut self, want: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let vals: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|_| self.err("bad float list"))?;
        if vals.len() != want {
            return Err(self.err(format!("expected {want} floats, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn keyed_floats(&mut self, key: &str, want: usize) -> Result<Vec<f64>> {
        let rest = self.keyed(key)?;
        let vals: std::result::Result<Vec<f64>, _> =
            rest.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|_| self.err(format!("bad float list for {key}")))?;
        if vals.len() != want {
            return Err(self.err(format!(
                "expected {want} floats for {key}, found {}",
                vals.len()
            )));
        }
        Ok(vals)
    }

    fn literal(&mut self, expect: &str) -> Result<()> {
        let line = self.next()?;
        if line != expect {
            return Err(self.err(format!("expected `{expect}`, found `{line}`")));
        }
        Ok(())
    }
}

fn norm_from(mean: Vec<f64>, std: Vec<f64>) -> NormStats {
    let mut stats = NormStats::identity();
    stats.mean.copy_from_slice(&mean);
    stats.std.copy_from_slice(&std);
    stats
}

pub fn save_frame_model(path: &Path, net: &FrameNet, norm: &NormStats) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "{FRAME_MAGIC}");
    let _ = writeln!(text, "dropout_rate {}", f(net.dropout_rate));
    let _ = writeln!(text, "smooth_ms {}", net.decode.smooth_ms);
    let _ = writeln!(text, "threshold {}", f(net.decode.threshold));
    let _ = writeln!(text, "norm_mean {}", floats_line(&norm.mean));
    let _ = writeln!(text, "norm_std {}", floats_line(&norm.std));
    let _ = writeln!(text, "w1");
    for row in net.w1.chunks(INPUT_DIM) {
        let _ = writeln!(text, "{}", floats_line(row));
    }
    let _ = writeln!(text, "b1");
    let _ = writeln!(text, "{}", floats_line(&net.b1));
    let _ = writeln!(text, "w2");
    let _ = writeln!(text, "{}", floats_line(&net.w2));
    let _ = writeln!(text, "b2");
    let _ = writeln!(text, "{}", floats_line(&[net.b2]));
    fs::write(path, text)
        .map_err(|e| CliError::internal(format!("write {}: {e}", path.display())))
}

pub fn save_structured_model(path: &Path, model: &StructuredModel) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "{STRUCT_MAGIC}");
    let _ = writeln!(text, "c {}", f(model.aggressiveness));
    let _ = writeln!(text, "epsilon_ms {}", f(model.epsilon_ms));
    let _ = writeln!(text, "min_dur_ms {}", model.constraints.min_dur_ms);
    let _ = writeln!(text, "max_dur_ms {}", model.constraints.max_dur_ms);
    let _ = writeln!(text, "dur_mean {}", f(model.dur_mean));
    let _ = writeln!(text, "dur_std {}", f(model.dur_std));
    let _ = writeln!(text, "post_ms {}", model.spec.post_ms);
    let _ = writeln!(text, "norm_mean {}", floats_line(&model.feat_norm.mean));
    let _ = writeln!(text, "norm_std {}", floats_line(&model.feat_norm.std));
    let _ = writeln!(text, "maps {}", model.spec.dim());
    for d in &model.spec.descriptors {
        let _ = writeln!(text, "{}", d.encode());
    }
    let _ = writeln!(text, "weights");
    for w in &model.weights {
        let _ = writeln!(text, "{}", f(*w));
    }
    fs::write(path, text)
        .map_err(|e| CliError::internal(format!("write {}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut r = LineReader::new(&text, path);
    match r.next()? {
        m if m == FRAME_MAGIC => load_frame(r).map(|(net, norm)| Model::Frame { net, norm }),
        m if m == STRUCT_MAGIC => load_structured(r).map(Model::Structured),
        other => Err(CliError::data(format!(
            "{}: unsupported model version `{other}` (expected `{FRAME_MAGIC}` or `{STRUCT_MAGIC}`)",
            path.display()
        ))),
    }
}

fn load_frame(mut r: LineReader<'_>) -> Result<(FrameNet, NormStats)> {
    let dropout_rate = r.keyed_f64("dropout_rate")?;
    let smooth_ms = r.keyed_usize("smooth_ms")?;
    let threshold = r.keyed_f64("threshold")?;
    let mean = r.keyed_floats("norm_mean", FEATURE_DIM)?;
    let std = r.keyed_floats("norm_std", FEATURE_DIM)?;
    r.literal("w1")?;
    let mut w1 = Vec::with_capacity(HIDDEN_DIM * INPUT_DIM);
    for _ in 0..HIDDEN_DIM {
        w1.extend(r.floats(INPUT_DIM)?);
    }
    r.literal("b1")?;
    let b1 = r.floats(HIDDEN_DIM)?;
    r.literal("w2")?;
    let w2 = r.floats(HIDDEN_DIM)?;
    r.literal("b2")?;
    let b2 = r.floats(1)?[0];
    let net = FrameNet {
        w1,
        b1,
        w2,
        b2,
        dropout_rate,
        decode: DecodeConfig {
            smooth_ms,
            threshold,
        },
    };
    Ok((net, norm_from(mean, std)))
}

fn load_structured(mut r: LineReader<'_>) -> Result<StructuredModel> {
    let aggressiveness = r.keyed_f64("c")?;
    let epsilon_ms = r.keyed_f64("epsilon_ms")?;
    let min_dur_ms = r.keyed_usize("min_dur_ms")?;
    let max_dur_ms = r.keyed_usize("max_dur_ms")?;
    let dur_mean = r.keyed_f64("dur_mean")?;
    let dur_std = r.keyed_f64("dur_std")?;
    let post_ms = r.keyed_usize("post_ms")?;
    let mean = r.keyed_floats("norm_mean", FEATURE_DIM)?;
    let std = r.keyed_floats("norm_std", FEATURE_DIM)?;
    let n_maps = r.keyed_usize("maps")?;
    let mut descriptors = Vec::with_capacity(n_maps);
    for _ in 0..n_maps {
        let line = r.next()?;
        descriptors.push(MapDescriptor::parse(line).map_err(|e| r.err(e))?);
    }
    r.literal("weights")?;
    let mut weights = Vec::with_capacity(n_maps);
    for _ in 0..n_maps {
        weights.push(r.floats(1)?[0]);
    }
    let model = StructuredModel {
        weights,
        spec: FeatureMapSpec {
            descriptors,
            post_ms,
        },
        feat_norm: norm_from(mean, std),
        dur_mean,
        dur_std,
        aggressiveness,
        epsilon_ms,
        constraints: CandidateConstraints {
            min_dur_ms,
            max_dur_ms,
        },
    };
    model
        .validate()
        .map_err(|e| CliError::data(format!("inconsistent model file: {e}")))?;
    Ok(model)
}
