//! Segment-level structured predictor.
//!
//! A candidate pre-aspiration is an onset/offset frame pair `(t_s, t_e)`.
//! Each candidate is summarized by a fixed feature-map vector φ built from
//! boundary values, local differences, interval statistics and the candidate
//! duration; a weight vector scores candidates linearly and inference is the
//! argmax over all candidates inside the search window:
//!
//! ```text
//! (t̂_s, t̂_e) = argmax over candidates of  w · φ(x̄, t_s, t_e)
//! ```
//!
//! Training performs Passive-Aggressive updates against the most violated
//! candidate (the argmax of score plus task loss), with the closed-form step
//!
//! ```text
//! τ = min{ C, hinge / ‖Δφ‖² },    Δφ = φ(gold) − φ(violator)
//! ```
//!
//! The task loss is ε-insensitive in duration: it penalizes only duration
//! discrepancies larger than ε milliseconds, so the objective targets how
//! long the predicted pre-aspiration is, not where it sits.
//!
//! Interval statistics are answered in O(1) per candidate from prefix sums
//! and sparse max tables ([`CumulativeStats`]); means use residuals against
//! the first frame so that difference maps vanish exactly on constant input.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acoustics::{FeatureSequence, NormStats, FEATURE_DIM, FEATURE_NAMES};
use crate::data::{Example, SearchWindow};

#[derive(Debug, Error, PartialEq)]
pub enum StructuredError {
    #[error("no valid candidate inside window [{start}, {end}] with durations [{min_dur}, {max_dur}] ms")]
    NoCandidates {
        start: usize,
        end: usize,
        min_dur: usize,
        max_dur: usize,
    },
    #[error("training and validation sets must both be nonempty")]
    EmptyTrainingSet,
    #[error("weight vector has {got} entries, feature map needs {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("cannot parse feature-map descriptor `{0}`")]
    BadDescriptor(String),
    #[error(transparent)]
    Acoustics(#[from] crate::acoustics::AcousticsError),
}

/// Candidate onset/offset pair, in frames (= ms).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub onset: usize,
    pub offset: usize,
}

impl Candidate {
    pub fn duration_ms(&self) -> f64 {
        (self.offset - self.onset) as f64
    }
}

/// Admissible candidate durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateConstraints {
    pub min_dur_ms: usize,
    pub max_dur_ms: usize,
}

impl Default for CandidateConstraints {
    fn default() -> Self {
        // 150 ms is > 5σ above the typical duration; 5 ms rejects specks.
        CandidateConstraints {
            min_dur_ms: 5,
            max_dur_ms: 150,
        }
    }
}

/// Kinds of feature maps. `s` is the local-difference span in ms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Feature value at the onset frame.
    ValueAtOnset,
    /// mean over `[t_s, t_s+s)` minus mean over `[t_s−s, t_s)`.
    DiffAtOnset(usize),
    /// Feature value at the offset frame.
    ValueAtOffset,
    /// mean over `[t_e, t_e+s)` minus mean over `[t_e−s, t_e)`.
    DiffAtOffset(usize),
    /// mean over `[t_s, t_e)`.
    IntervalMean,
    /// mean over `[t_s, t_e)` minus mean over `[t_s−s, t_s)`.
    IntervalMeanDiff(usize),
    /// max over `[t_s, t_e)`.
    IntervalMax,
    /// max over `[t_s, t_e)` minus max over `[t_s−s, t_s)`.
    IntervalMaxDiff(usize),
    /// mean over `[t_s, t_e)` minus mean over the post interval.
    MeanMinusPost,
    /// mean over the post interval `[t_e, t_e+post)`.
    MeanPost,
    /// max over the post interval.
    MaxPost,
    /// Candidate duration in ms, z-normalized by training duration stats.
    Duration,
}

/// What a descriptor's value depends on; drives the decomposed scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dependency {
    Onset,
    Offset,
    Joint,
}

/// One feature map: a kind applied to one acoustic feature column.
/// `feature` is ignored for [`MapKind::Duration`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapDescriptor {
    pub feature: usize,
    pub kind: MapKind,
}

impl MapDescriptor {
    fn dependency(&self) -> Dependency {
        match self.kind {
            MapKind::ValueAtOnset | MapKind::DiffAtOnset(_) => Dependency::Onset,
            MapKind::ValueAtOffset
            | MapKind::DiffAtOffset(_)
            | MapKind::MeanPost
            | MapKind::MaxPost => Dependency::Offset,
            _ => Dependency::Joint,
        }
    }

    /// Stable one-line text form, used by the model file format.
    pub fn encode(&self) -> String {
        use alloc::format;
        let name = FEATURE_NAMES[self.feature.min(FEATURE_DIM - 1)];
        match self.kind {
            MapKind::ValueAtOnset => format!("onset_value {name}"),
            MapKind::DiffAtOnset(s) => format!("onset_diff:{s} {name}"),
            MapKind::ValueAtOffset => format!("offset_value {name}"),
            MapKind::DiffAtOffset(s) => format!("offset_diff:{s} {name}"),
            MapKind::IntervalMean => format!("interval_mean {name}"),
            MapKind::IntervalMeanDiff(s) => format!("interval_mean_diff:{s} {name}"),
            MapKind::IntervalMax => format!("interval_max {name}"),
            MapKind::IntervalMaxDiff(s) => format!("interval_max_diff:{s} {name}"),
            MapKind::MeanMinusPost => format!("mean_minus_post {name}"),
            MapKind::MeanPost => format!("mean_post {name}"),
            MapKind::MaxPost => format!("max_post {name}"),
            MapKind::Duration => String::from("duration"),
        }
    }

    pub fn parse(line: &str) -> Result<Self, StructuredError> {
        let bad = || StructuredError::BadDescriptor(String::from(line));
        let mut parts = line.split_whitespace();
        let head = parts.next().ok_or_else(bad)?;
        if head == "duration" {
            return Ok(MapDescriptor {
                feature: 0,
                kind: MapKind::Duration,
            });
        }
        let name = parts.next().ok_or_else(bad)?;
        let feature = FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(bad)?;
        let (kind_name, span) = match head.split_once(':') {
            Some((k, s)) => (k, Some(s.parse::<usize>().map_err(|_| bad())?)),
            None => (head, None),
        };
        let kind = match (kind_name, span) {
            ("onset_value", None) => MapKind::ValueAtOnset,
            ("onset_diff", Some(s)) => MapKind::DiffAtOnset(s),
            ("offset_value", None) => MapKind::ValueAtOffset,
            ("offset_diff", Some(s)) => MapKind::DiffAtOffset(s),
            ("interval_mean", None) => MapKind::IntervalMean,
            ("interval_mean_diff", Some(s)) => MapKind::IntervalMeanDiff(s),
            ("interval_max", None) => MapKind::IntervalMax,
            ("interval_max_diff", Some(s)) => MapKind::IntervalMaxDiff(s),
            ("mean_minus_post", None) => MapKind::MeanMinusPost,
            ("mean_post", None) => MapKind::MeanPost,
            ("max_post", None) => MapKind::MaxPost,
            _ => return Err(bad()),
        };
        Ok(MapDescriptor { feature, kind })
    }
}

/// Reading of the interval-statistics row for `P_max`, which the feature-map
/// table leaves ambiguous. [`IntervalRowMode::MeanAndMax`] emits both
/// statistics, each with a plain value and 5/10 ms boundary differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntervalRowMode {
    #[default]
    MeanAndMax,
    MeanOnly,
}

/// Ordered descriptor list; φ has one component per descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapSpec {
    pub descriptors: Vec<MapDescriptor>,
    /// Length of the post-offset interval in ms.
    pub post_ms: usize,
}

impl FeatureMapSpec {
    /// The standard map set: boundary values and local differences per the
    /// feature-map table, interval statistics for `P_max`, post-interval
    /// means/maxima, and one duration map.
    pub fn standard() -> Self {
        Self::standard_with(IntervalRowMode::MeanAndMax)
    }

    pub fn standard_with(row_mode: IntervalRowMode) -> Self {
        use crate::acoustics::{E_HIGH, E_LOW, E_TOTAL, H_WIENER, P_MAX, R_L, V, ZC};
        const SPANS: [usize; 3] = [5, 10, 15];
        let mut d = Vec::new();

        // Value at t_s: plain value for E_total, E_high, H_wiener, R_l;
        // local differences for every feature.
        let onset_value = [E_TOTAL, E_HIGH, H_WIENER, R_L];
        for f in 0..FEATURE_DIM {
            if onset_value.contains(&f) {
                d.push(MapDescriptor {
                    feature: f,
                    kind: MapKind::ValueAtOnset,
                });
            }
            for s in SPANS {
                d.push(MapDescriptor {
                    feature: f,
                    kind: MapKind::DiffAtOnset(s),
                });
            }
        }

        // Value at t_e: value + differences for all but V and ZC.
        for f in [E_TOTAL, E_LOW, E_HIGH, H_WIENER, P_MAX, R_L] {
            d.push(MapDescriptor {
                feature: f,
                kind: MapKind::ValueAtOffset,
            });
            for s in SPANS {
                d.push(MapDescriptor {
                    feature: f,
                    kind: MapKind::DiffAtOffset(s),
                });
            }
        }

        // Interval statistics over (t_s, t_e) for P_max.
        let stats: &[MapKind] = match row_mode {
            IntervalRowMode::MeanAndMax => &[
                MapKind::IntervalMean,
                MapKind::IntervalMeanDiff(5),
                MapKind::IntervalMeanDiff(10),
                MapKind::IntervalMax,
                MapKind::IntervalMaxDiff(5),
                MapKind::IntervalMaxDiff(10),
            ],
            IntervalRowMode::MeanOnly => &[
                MapKind::IntervalMean,
                MapKind::IntervalMeanDiff(5),
                MapKind::IntervalMeanDiff(10),
            ],
        };
        for &kind in stats {
            d.push(MapDescriptor {
                feature: P_MAX,
                kind,
            });
        }

        // mean over (t_s, t_e) minus mean over (t_e, t_e+50).
        for f in [E_HIGH, H_WIENER, ZC] {
            d.push(MapDescriptor {
                feature: f,
                kind: MapKind::MeanMinusPost,
            });
        }
        // mean over (t_e, t_e+50).
        for f in [E_HIGH, H_WIENER, R_L, V] {
            d.push(MapDescriptor {
                feature: f,
                kind: MapKind::MeanPost,
            });
        }
        // max over (t_e, t_e+50).
        for f in [E_HIGH, H_WIENER] {
            d.push(MapDescriptor {
                feature: f,
                kind: MapKind::MaxPost,
            });
        }

        d.push(MapDescriptor {
            feature: 0,
            kind: MapKind::Duration,
        });

        FeatureMapSpec {
            descriptors: d,
            post_ms: 50,
        }
    }

    /// φ dimension.
    pub fn dim(&self) -> usize {
        self.descriptors.len()
    }
}

/// Prefix sums and sparse max tables over one feature sequence, answering
/// interval means and maxima in O(1).
///
/// Means are stored as residuals against frame 0 per feature, which keeps
/// difference maps exactly zero on constant columns.
pub struct CumulativeStats<'a> {
    seq: &'a FeatureSequence,
    reference: [f64; FEATURE_DIM],
    prefix: Vec<[f64; FEATURE_DIM]>,
    sparse: Vec<Vec<[f64; FEATURE_DIM]>>,
}

impl<'a> CumulativeStats<'a> {
    pub fn new(seq: &'a FeatureSequence) -> Self {
        let t_len = seq.len();
        assert!(t_len > 0, "feature sequence must be nonempty");
        let reference = *seq.row(0);
        let mut prefix = Vec::with_capacity(t_len + 1);
        prefix.push([0.0; FEATURE_DIM]);
        let mut acc = [0.0; FEATURE_DIM];
        for row in seq.rows() {
            for j in 0..FEATURE_DIM {
                acc[j] += row[j] - reference[j];
            }
            prefix.push(acc);
        }

        let levels = if t_len <= 1 {
            1
        } else {
            t_len.ilog2() as usize + 1
        };
        let mut sparse: Vec<Vec<[f64; FEATURE_DIM]>> = Vec::with_capacity(levels);
        sparse.push(seq.rows().to_vec());
        for k in 1..levels {
            let span = 1usize << k;
            let prev = &sparse[k - 1];
            let mut level = Vec::with_capacity(t_len - span + 1);
            for i in 0..=t_len - span {
                let a = prev[i];
                let b = prev[i + span / 2];
                let mut m = [0.0; FEATURE_DIM];
                for j in 0..FEATURE_DIM {
                    m[j] = a[j].max(b[j]);
                }
                level.push(m);
            }
            sparse.push(level);
        }

        CumulativeStats {
            seq,
            reference,
            prefix,
            sparse,
        }
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn value(&self, feature: usize, t: usize) -> f64 {
        self.seq.get(t, feature)
    }

    /// Mean of `feature` over `[a, b)` clamped to the sequence; 0 if the
    /// clamped interval is empty.
    pub fn mean(&self, feature: usize, a: isize, b: isize) -> f64 {
        let t = self.seq.len() as isize;
        let a = a.clamp(0, t) as usize;
        let b = b.clamp(0, t) as usize;
        if a >= b {
            return 0.0;
        }
        let sum = self.prefix[b][feature] - self.prefix[a][feature];
        self.reference[feature] + sum / (b - a) as f64
    }

    /// Max of `feature` over `[a, b)` clamped to the sequence; 0 if empty.
    pub fn max(&self, feature: usize, a: isize, b: isize) -> f64 {
        let t = self.seq.len() as isize;
        let a = a.clamp(0, t) as usize;
        let b = b.clamp(0, t) as usize;
        if a >= b {
            return 0.0;
        }
        let k = (b - a).ilog2() as usize;
        let left = self.sparse[k][a][feature];
        let right = self.sparse[k][b - (1 << k)][feature];
        left.max(right)
    }

    fn local_diff(&self, feature: usize, t: usize, s: usize) -> f64 {
        let t = t as isize;
        let s = s as isize;
        self.mean(feature, t, t + s) - self.mean(feature, t - s, t)
    }
}

/// Local difference of a feature around frame `t`: mean over `[t, t+s)`
/// minus mean over `[t−s, t)`, both clamped to the sequence (an interval
/// that clamps to nothing contributes 0).
pub fn local_diff(features: &FeatureSequence, feature: usize, t: usize, s: usize) -> f64 {
    let t_len = features.len() as isize;
    let mean = |a: isize, b: isize| -> f64 {
        let a = a.clamp(0, t_len) as usize;
        let b = b.clamp(0, t_len) as usize;
        if a >= b {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in a..b {
            sum += features.get(i, feature);
        }
        sum / (b - a) as f64
    };
    let t = t as isize;
    let s = s as isize;
    mean(t, t + s) - mean(t - s, t)
}

fn eval_descriptor(
    stats: &CumulativeStats<'_>,
    d: &MapDescriptor,
    cand: Candidate,
    post_ms: usize,
    dur_mean: f64,
    dur_std: f64,
) -> f64 {
    let f = d.feature;
    let ts = cand.onset as isize;
    let te = cand.offset as isize;
    let post = post_ms as isize;
    match d.kind {
        MapKind::ValueAtOnset => stats.value(f, cand.onset),
        MapKind::DiffAtOnset(s) => stats.local_diff(f, cand.onset, s),
        MapKind::ValueAtOffset => stats.value(f, cand.offset),
        MapKind::DiffAtOffset(s) => stats.local_diff(f, cand.offset, s),
        MapKind::IntervalMean => stats.mean(f, ts, te),
        MapKind::IntervalMeanDiff(s) => {
            stats.mean(f, ts, te) - stats.mean(f, ts - s as isize, ts)
        }
        MapKind::IntervalMax => stats.max(f, ts, te),
        MapKind::IntervalMaxDiff(s) => stats.max(f, ts, te) - stats.max(f, ts - s as isize, ts),
        MapKind::MeanMinusPost => stats.mean(f, ts, te) - stats.mean(f, te, te + post),
        MapKind::MeanPost => stats.mean(f, te, te + post),
        MapKind::MaxPost => stats.max(f, te, te + post),
        MapKind::Duration => (cand.duration_ms() - dur_mean) / dur_std,
    }
}

/// Evaluate the full feature-map vector for one candidate.
pub fn phi(
    spec: &FeatureMapSpec,
    stats: &CumulativeStats<'_>,
    cand: Candidate,
    dur_mean: f64,
    dur_std: f64,
) -> Vec<f64> {
    spec.descriptors
        .iter()
        .map(|d| eval_descriptor(stats, d, cand, spec.post_ms, dur_mean, dur_std))
        .collect()
}

/// ε-insensitive duration loss (milliseconds): only duration discrepancies
/// beyond ε are penalized. Depends on durations only, never on positions.
pub fn task_loss(gold: Candidate, pred: Candidate, epsilon_ms: f64) -> f64 {
    task_loss_durations(gold.duration_ms(), pred.duration_ms(), epsilon_ms)
}

pub fn task_loss_durations(gold_dur_ms: f64, pred_dur_ms: f64, epsilon_ms: f64) -> f64 {
    ((pred_dur_ms - gold_dur_ms).abs() - epsilon_ms).max(0.0)
}

/// All candidates `(t_s, t_e)` with both bounds in the window and duration
/// within the constraints, in lexicographic order.
pub fn candidate_set(
    t_len: usize,
    constraints: CandidateConstraints,
    window: SearchWindow,
) -> Result<Vec<Candidate>, StructuredError> {
    let mut out = Vec::new();
    for_each_candidate(t_len, constraints, window, |c| out.push(c));
    if out.is_empty() {
        return Err(StructuredError::NoCandidates {
            start: window.start,
            end: window.end.min(t_len.saturating_sub(1)),
            min_dur: constraints.min_dur_ms,
            max_dur: constraints.max_dur_ms,
        });
    }
    Ok(out)
}

/// Lexicographic candidate walk shared by enumeration and inference so the
/// tie-break order is identical everywhere.
fn for_each_candidate(
    t_len: usize,
    constraints: CandidateConstraints,
    window: SearchWindow,
    mut visit: impl FnMut(Candidate),
) {
    if t_len < 2 {
        return;
    }
    let end = window.end.min(t_len - 1);
    let min_dur = constraints.min_dur_ms.max(1);
    let max_dur = constraints.max_dur_ms;
    for onset in window.start..end {
        let lo = onset + min_dur;
        let hi = (onset + max_dur).min(end);
        for offset in lo..=hi {
            visit(Candidate { onset, offset });
        }
    }
}

/// Loss-augmentation parameters for the violated-candidate search.
#[derive(Clone, Copy)]
struct LossAugment {
    gold_dur_ms: f64,
    epsilon_ms: f64,
}

/// Argmax of the (optionally loss-augmented) linear score over candidates.
///
/// The score decomposes into onset-only, offset-only and joint descriptor
/// groups; the per-frame groups are precomputed so each candidate costs only
/// the joint maps. Ties resolve to the lexicographically smallest candidate.
fn best_candidate(
    weights: &[f64],
    spec: &FeatureMapSpec,
    stats: &CumulativeStats<'_>,
    window: SearchWindow,
    constraints: CandidateConstraints,
    dur_mean: f64,
    dur_std: f64,
    augment: Option<LossAugment>,
) -> Option<Candidate> {
    let t_len = stats.len();
    if t_len < 2 {
        return None;
    }
    let end = window.end.min(t_len - 1);
    if window.start >= end {
        return None;
    }
    let lo_frame = window.start;
    let span = end - lo_frame + 1;

    let mut onset_part = vec![0.0f64; span];
    let mut offset_part = vec![0.0f64; span];
    let mut joint: Vec<(f64, &MapDescriptor)> = Vec::new();
    for (d, &w) in spec.descriptors.iter().zip(weights.iter()) {
        match d.dependency() {
            Dependency::Onset => {
                for (i, acc) in onset_part.iter_mut().enumerate() {
                    let c = Candidate {
                        onset: lo_frame + i,
                        offset: lo_frame + i + 1,
                    };
                    *acc += w * eval_descriptor(stats, d, c, spec.post_ms, dur_mean, dur_std);
                }
            }
            Dependency::Offset => {
                for (i, acc) in offset_part.iter_mut().enumerate() {
                    let c = Candidate {
                        onset: lo_frame + i.saturating_sub(1),
                        offset: lo_frame + i,
                    };
                    *acc += w * eval_descriptor(stats, d, c, spec.post_ms, dur_mean, dur_std);
                }
            }
            Dependency::Joint => joint.push((w, d)),
        }
    }

    // γ depends on the candidate duration only.
    let max_dur = constraints.max_dur_ms.min(span.saturating_sub(1)).max(1);
    let gamma_by_dur: Vec<f64> = match augment {
        Some(a) => (0..=max_dur)
            .map(|d| task_loss_durations(a.gold_dur_ms, d as f64, a.epsilon_ms))
            .collect(),
        None => vec![0.0; max_dur + 1],
    };

    let mut best: Option<(f64, Candidate)> = None;
    for_each_candidate(t_len, constraints, window, |c| {
        let mut score = onset_part[c.onset - lo_frame]
            + offset_part[c.offset - lo_frame]
            + gamma_by_dur[c.offset - c.onset];
        for (w, d) in &joint {
            score += w * eval_descriptor(stats, d, c, spec.post_ms, dur_mean, dur_std);
        }
        match &best {
            Some((b, _)) if score <= *b => {}
            _ => best = Some((score, c)),
        }
    });
    best.map(|(_, c)| c)
}

/// Structured model: weights, feature-map spec, normalization and candidate
/// constraints. Immutable once trained; shareable across inference workers.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredModel {
    pub weights: Vec<f64>,
    pub spec: FeatureMapSpec,
    pub feat_norm: NormStats,
    /// Training-set duration statistics normalizing the duration map.
    pub dur_mean: f64,
    pub dur_std: f64,
    /// PA aggressiveness parameter C.
    pub aggressiveness: f64,
    /// Task-loss slack ε in ms.
    pub epsilon_ms: f64,
    pub constraints: CandidateConstraints,
}

impl StructuredModel {
    /// Fresh zero-weight model.
    pub fn new(
        spec: FeatureMapSpec,
        feat_norm: NormStats,
        dur_mean: f64,
        dur_std: f64,
        aggressiveness: f64,
        epsilon_ms: f64,
        constraints: CandidateConstraints,
    ) -> Self {
        let dim = spec.dim();
        StructuredModel {
            weights: vec![0.0; dim],
            spec,
            feat_norm,
            dur_mean,
            dur_std,
            aggressiveness,
            epsilon_ms,
            constraints,
        }
    }

    pub fn validate(&self) -> Result<(), StructuredError> {
        if self.weights.len() != self.spec.dim() {
            return Err(StructuredError::DimensionMismatch {
                got: self.weights.len(),
                want: self.spec.dim(),
            });
        }
        Ok(())
    }
}

fn no_candidates(model: &StructuredModel, t_len: usize, window: SearchWindow) -> StructuredError {
    StructuredError::NoCandidates {
        start: window.start,
        end: window.end.min(t_len.saturating_sub(1)),
        min_dur: model.constraints.min_dur_ms,
        max_dur: model.constraints.max_dur_ms,
    }
}

/// Predict the best onset/offset pair for raw (unnormalized) features.
pub fn infer(
    model: &StructuredModel,
    features: &FeatureSequence,
    window: SearchWindow,
) -> Result<Candidate, StructuredError> {
    let normed = model.feat_norm.apply(features);
    infer_normalized(model, &normed, window)
}

/// As [`infer`], for features already normalized with the model's stats.
pub fn infer_normalized(
    model: &StructuredModel,
    features: &FeatureSequence,
    window: SearchWindow,
) -> Result<Candidate, StructuredError> {
    let stats = CumulativeStats::new(features);
    best_candidate(
        &model.weights,
        &model.spec,
        &stats,
        window,
        model.constraints,
        model.dur_mean,
        model.dur_std,
        None,
    )
    .ok_or_else(|| no_candidates(model, features.len(), window))
}

/// Most violated candidate: argmax of score plus task loss against `gold`.
pub fn loss_augmented_infer(
    model: &StructuredModel,
    features: &FeatureSequence,
    window: SearchWindow,
    gold: Candidate,
) -> Result<Candidate, StructuredError> {
    let normed = model.feat_norm.apply(features);
    loss_augmented_infer_normalized(model, &normed, window, gold)
}

pub fn loss_augmented_infer_normalized(
    model: &StructuredModel,
    features: &FeatureSequence,
    window: SearchWindow,
    gold: Candidate,
) -> Result<Candidate, StructuredError> {
    let stats = CumulativeStats::new(features);
    best_candidate(
        &model.weights,
        &model.spec,
        &stats,
        window,
        model.constraints,
        model.dur_mean,
        model.dur_std,
        Some(LossAugment {
            gold_dur_ms: gold.duration_ms(),
            epsilon_ms: model.epsilon_ms,
        }),
    )
    .ok_or_else(|| no_candidates(model, features.len(), window))
}

/// Outcome of one Passive-Aggressive step, for logging and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaStep {
    pub violator: Candidate,
    pub hinge: f64,
    pub tau: f64,
}

/// One online PA update on normalized features. Passive (no weight change)
/// when the margin constraint already holds or Δφ vanishes.
pub fn pa_update_normalized(
    model: &mut StructuredModel,
    features: &FeatureSequence,
    window: SearchWindow,
    gold: Candidate,
) -> Result<PaStep, StructuredError> {
    let stats = CumulativeStats::new(features);
    let violator = best_candidate(
        &model.weights,
        &model.spec,
        &stats,
        window,
        model.constraints,
        model.dur_mean,
        model.dur_std,
        Some(LossAugment {
            gold_dur_ms: gold.duration_ms(),
            epsilon_ms: model.epsilon_ms,
        }),
    )
    .ok_or_else(|| no_candidates(model, features.len(), window))?;

    let phi_gold = phi(&model.spec, &stats, gold, model.dur_mean, model.dur_std);
    let phi_vio = phi(&model.spec, &stats, violator, model.dur_mean, model.dur_std);
    let gamma = task_loss(gold, violator, model.epsilon_ms);

    let mut margin = 0.0;
    let mut sq_norm = 0.0;
    let mut delta = Vec::with_capacity(phi_gold.len());
    for ((g, v), w) in phi_gold
        .iter()
        .zip(phi_vio.iter())
        .zip(model.weights.iter())
    {
        let d = g - v;
        margin += w * d;
        sq_norm += d * d;
        delta.push(d);
    }
    let hinge = (gamma - margin).max(0.0);
    if hinge == 0.0 || sq_norm == 0.0 {
        return Ok(PaStep {
            violator,
            hinge,
            tau: 0.0,
        });
    }
    let tau = model.aggressiveness.min(hinge / sq_norm);
    for (w, d) in model.weights.iter_mut().zip(delta.iter()) {
        *w += tau * d;
    }
    Ok(PaStep {
        violator,
        hinge,
        tau,
    })
}

/// PA update on a raw example (normalizes internally).
pub fn pa_update(model: &mut StructuredModel, example: &Example) -> Result<PaStep, StructuredError> {
    let normed = model.feat_norm.apply(&example.features);
    pa_update_normalized(
        model,
        &normed,
        example.window,
        Candidate {
            onset: example.onset,
            offset: example.offset,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredTrainConfig {
    pub aggressiveness: f64,
    pub epsilon_ms: f64,
    pub constraints: CandidateConstraints,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Evaluate and return the running average of the weight vector instead
    /// of the raw PA iterate.
    pub average_weights: bool,
    pub row_mode: IntervalRowMode,
}

impl Default for StructuredTrainConfig {
    fn default() -> Self {
        StructuredTrainConfig {
            aggressiveness: 50.0,
            epsilon_ms: 2.0,
            constraints: CandidateConstraints::default(),
            max_epochs: 50,
            patience: 10,
            seed: 42,
            average_weights: false,
            row_mode: IntervalRowMode::MeanAndMax,
        }
    }
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub val_task_loss: f64,
    pub best_so_far: f64,
}

/// Train a structured model with online PA updates in a seeded shuffled
/// order, early-stopping on mean validation task loss and returning the
/// best-validation snapshot.
pub fn train_structured(
    train: &[Example],
    validation: &[Example],
    cfg: &StructuredTrainConfig,
) -> Result<(StructuredModel, Vec<EpochStats>), StructuredError> {
    if train.is_empty() || validation.is_empty() {
        return Err(StructuredError::EmptyTrainingSet);
    }

    let feats: Vec<&FeatureSequence> = train.iter().map(|e| &e.features).collect();
    let owned: Vec<FeatureSequence> = feats.iter().map(|&f| f.clone()).collect();
    let feat_norm = NormStats::fit(&owned)?;

    // duration stats over training gold (population std, floored).
    let durs: Vec<f64> = train.iter().map(|e| e.gold_duration_ms()).collect();
    let dur_mean = durs.iter().sum::<f64>() / durs.len() as f64;
    let var = durs.iter().map(|d| (d - dur_mean) * (d - dur_mean)).sum::<f64>() / durs.len() as f64;
    let dur_std = {
        let s = crate::math::sqrt(var);
        if s < 1e-9 {
            1.0
        } else {
            s
        }
    };

    let spec = FeatureMapSpec::standard_with(cfg.row_mode);
    let mut model = StructuredModel::new(
        spec,
        feat_norm,
        dur_mean,
        dur_std,
        cfg.aggressiveness,
        cfg.epsilon_ms,
        cfg.constraints,
    );

    let train_norm: Vec<FeatureSequence> =
        train.iter().map(|e| model.feat_norm.apply(&e.features)).collect();
    let val_norm: Vec<FeatureSequence> = validation
        .iter()
        .map(|e| model.feat_norm.apply(&e.features))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let dim = model.spec.dim();
    let mut avg_sum = vec![0.0f64; dim];
    let mut avg_count = 0u64;

    let mut best_loss = f64::INFINITY;
    let mut best_weights = model.weights.clone();
    let mut stale = 0usize;
    let mut log = Vec::new();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let ex = &train[i];
            pa_update_normalized(
                &mut model,
                &train_norm[i],
                ex.window,
                Candidate {
                    onset: ex.onset,
                    offset: ex.offset,
                },
            )?;
            if cfg.average_weights {
                for (a, w) in avg_sum.iter_mut().zip(model.weights.iter()) {
                    *a += w;
                }
                avg_count += 1;
            }
        }

        let eval_weights: Vec<f64> = if cfg.average_weights {
            avg_sum.iter().map(|a| a / avg_count as f64).collect()
        } else {
            model.weights.clone()
        };
        let eval_model = StructuredModel {
            weights: eval_weights,
            ..model.clone()
        };
        let mut loss = 0.0;
        for (ex, normed) in validation.iter().zip(val_norm.iter()) {
            let pred = infer_normalized(&eval_model, normed, ex.window)?;
            loss += task_loss_durations(ex.gold_duration_ms(), pred.duration_ms(), cfg.epsilon_ms);
        }
        loss /= validation.len() as f64;

        if loss < best_loss {
            best_loss = loss;
            best_weights = eval_model.weights.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        log.push(EpochStats {
            epoch,
            val_task_loss: loss,
            best_so_far: best_loss,
        });
        if stale >= cfg.patience || best_loss == 0.0 {
            break;
        }
    }

    model.weights = best_weights;
    Ok((model, log))
}
