//! Frame-level classifier: a 40-40-1 feedforward net over 5-frame context
//! windows, plus the sequence decoder.
//!
//! Each frame is classified from the concatenation of its five surrounding
//! normalized feature vectors (x_{t−2} .. x_{t+2}). The net has one hidden
//! ReLU layer with inverted dropout during training and a sigmoid output; it
//! is trained on binary cross entropy with plain mini-batch gradient
//! descent, negatives subsampled to balance the classes.
//!
//! Decoding smooths the per-frame probabilities with a centered moving
//! average, thresholds them, and returns the boundaries of the longest run
//! of positive frames (earliest run on ties). If no frame clears the
//! threshold, the argmax frame is returned as a length-1 interval flagged
//! low-confidence; the problem setting guarantees an event exists.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acoustics::{FeatureSequence, NormStats, FEATURE_DIM};
use crate::data::Example;
use crate::math;

/// Frames of context on each side of the classified frame.
pub const CONTEXT_RADIUS: usize = 2;
/// Input dimension: 5 concatenated 8-feature frames.
pub const INPUT_DIM: usize = (2 * CONTEXT_RADIUS + 1) * FEATURE_DIM;
pub const HIDDEN_DIM: usize = 40;

#[derive(Debug, Error, PartialEq)]
pub enum FrameModelError {
    #[error("frame index {index} out of range for {len} frames")]
    FrameOutOfRange { index: usize, len: usize },
    #[error("training data has no {0} frames")]
    EmptyClass(&'static str),
    #[error("training and validation sets must both be nonempty")]
    EmptyTrainingSet,
    #[error(transparent)]
    Acoustics(#[from] crate::acoustics::AcousticsError),
}

/// Smoothing and thresholding applied to the probability sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Centered moving-average window in ms (frames).
    pub smooth_ms: usize,
    pub threshold: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            smooth_ms: 9,
            threshold: 0.5,
        }
    }
}

/// 40-40-1 feedforward net. `w1` is `HIDDEN_DIM × INPUT_DIM` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameNet {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub dropout_rate: f64,
    pub decode: DecodeConfig,
}

impl FrameNet {
    pub fn zeros() -> Self {
        FrameNet {
            w1: vec![0.0; HIDDEN_DIM * INPUT_DIM],
            b1: vec![0.0; HIDDEN_DIM],
            w2: vec![0.0; HIDDEN_DIM],
            b2: 0.0,
            dropout_rate: 0.3,
            decode: DecodeConfig::default(),
        }
    }

    /// Seeded Xavier-uniform initialization.
    pub fn init(seed: u64, dropout_rate: f64, decode: DecodeConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lim1 = math::sqrt(6.0 / (INPUT_DIM + HIDDEN_DIM) as f64);
        let lim2 = math::sqrt(6.0 / (HIDDEN_DIM + 1) as f64);
        let w1 = (0..HIDDEN_DIM * INPUT_DIM)
            .map(|_| rng.gen_range(-lim1..lim1))
            .collect();
        let w2 = (0..HIDDEN_DIM).map(|_| rng.gen_range(-lim2..lim2)).collect();
        FrameNet {
            w1,
            b1: vec![0.0; HIDDEN_DIM],
            w2,
            b2: 0.0,
            dropout_rate,
            decode,
        }
    }

    fn pre_activations(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), INPUT_DIM);
        let mut z1 = self.b1.clone();
        for (i, z) in z1.iter_mut().enumerate() {
            let row = &self.w1[i * INPUT_DIM..(i + 1) * INPUT_DIM];
            let mut acc = 0.0;
            for (w, x) in row.iter().zip(input.iter()) {
                acc += w * x;
            }
            *z += acc;
        }
        z1
    }

    /// Deterministic inference pass: sigmoid(w2 · relu(W1 x + b1) + b2).
    pub fn forward(&self, input: &[f64]) -> f64 {
        let z1 = self.pre_activations(input);
        let mut z2 = self.b2;
        for (w, z) in self.w2.iter().zip(z1.iter()) {
            z2 += w * z.max(0.0);
        }
        math::sigmoid(z2)
    }

    /// Training pass with an inverted-dropout mask over the hidden layer.
    pub fn forward_training(&self, input: &[f64], rng: &mut ChaCha8Rng) -> f64 {
        let mask = sample_mask(self.dropout_rate, rng);
        let z1 = self.pre_activations(input);
        let keep = 1.0 - self.dropout_rate;
        let mut z2 = self.b2;
        for i in 0..HIDDEN_DIM {
            if mask[i] {
                z2 += self.w2[i] * z1[i].max(0.0) / keep;
            }
        }
        math::sigmoid(z2)
    }
}

fn sample_mask(dropout: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    if dropout <= 0.0 {
        return vec![true; HIDDEN_DIM];
    }
    (0..HIDDEN_DIM).map(|_| rng.gen::<f64>() >= dropout).collect()
}

/// Context vector for frame `t`: five concatenated feature rows, replicating
/// the nearest edge frame where the context overruns the sequence.
pub fn build_context(features: &FeatureSequence, t: usize) -> Result<Vec<f64>, FrameModelError> {
    let len = features.len();
    if t >= len {
        return Err(FrameModelError::FrameOutOfRange { index: t, len });
    }
    let mut out = Vec::with_capacity(INPUT_DIM);
    let r = CONTEXT_RADIUS as isize;
    for dt in -r..=r {
        let i = (t as isize + dt).clamp(0, len as isize - 1) as usize;
        out.extend_from_slice(features.row(i));
    }
    Ok(out)
}

const P_CLAMP: f64 = 1e-7;

/// Binary cross entropy with the probability clamped away from {0, 1}.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    -(y * math::ln(p) + (1.0 - y) * math::ln(1.0 - p))
}

/// Gradients of [`bce_loss`] w.r.t. every parameter, same shapes as the net.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl NetGradients {
    fn zeros() -> Self {
        NetGradients {
            w1: vec![0.0; HIDDEN_DIM * INPUT_DIM],
            b1: vec![0.0; HIDDEN_DIM],
            w2: vec![0.0; HIDDEN_DIM],
            b2: 0.0,
        }
    }

    fn accumulate(&mut self, other: &NetGradients, scale: f64) {
        for (a, b) in self.w1.iter_mut().zip(other.w1.iter()) {
            *a += scale * b;
        }
        for (a, b) in self.b1.iter_mut().zip(other.b1.iter()) {
            *a += scale * b;
        }
        for (a, b) in self.w2.iter_mut().zip(other.w2.iter()) {
            *a += scale * b;
        }
        self.b2 += scale * other.b2;
    }
}

/// Analytic BCE gradients for one example, no dropout. This is the exact
/// derivative of `bce_loss(forward(input), label)`.
pub fn bce_gradients(net: &FrameNet, input: &[f64], label: f64) -> (f64, NetGradients) {
    bce_gradients_masked(net, input, label, None)
}

fn bce_gradients_masked(
    net: &FrameNet,
    input: &[f64],
    label: f64,
    mask: Option<&[bool]>,
) -> (f64, NetGradients) {
    let keep = match mask {
        Some(_) => 1.0 - net.dropout_rate,
        None => 1.0,
    };
    let z1 = net.pre_activations(input);
    let mut hd = vec![0.0; HIDDEN_DIM];
    for i in 0..HIDDEN_DIM {
        let active = mask.map_or(true, |m| m[i]);
        if active {
            hd[i] = z1[i].max(0.0) / keep;
        }
    }
    let mut z2 = net.b2;
    for (w, h) in net.w2.iter().zip(hd.iter()) {
        z2 += w * h;
    }
    let p = math::sigmoid(z2);
    let loss = bce_loss(p, label);

    let dz2 = p - label;
    let mut g = NetGradients::zeros();
    g.b2 = dz2;
    for i in 0..HIDDEN_DIM {
        g.w2[i] = dz2 * hd[i];
        let active = mask.map_or(true, |m| m[i]);
        if active && z1[i] > 0.0 {
            let dz1 = dz2 * net.w2[i] / keep;
            g.b1[i] = dz1;
            let row = &mut g.w1[i * INPUT_DIM..(i + 1) * INPUT_DIM];
            for (slot, x) in row.iter_mut().zip(input.iter()) {
                *slot = dz1 * x;
            }
        }
    }
    (loss, g)
}

/// One mini-batch gradient-descent step (gradients averaged over the batch,
/// fresh dropout mask per example).
pub fn train_step(
    net: &mut FrameNet,
    batch: &[(Vec<f64>, f64)],
    lr: f64,
    rng: &mut ChaCha8Rng,
) {
    if batch.is_empty() {
        return;
    }
    let mut total = NetGradients::zeros();
    let scale = 1.0 / batch.len() as f64;
    for (input, label) in batch {
        let mask = if net.dropout_rate > 0.0 {
            Some(sample_mask(net.dropout_rate, rng))
        } else {
            None
        };
        let (_, g) = bce_gradients_masked(net, input, *label, mask.as_deref());
        total.accumulate(&g, scale);
    }
    for (w, g) in net.w1.iter_mut().zip(total.w1.iter()) {
        *w -= lr * g;
    }
    for (w, g) in net.b1.iter_mut().zip(total.b1.iter()) {
        *w -= lr * g;
    }
    for (w, g) in net.w2.iter_mut().zip(total.w2.iter()) {
        *w -= lr * g;
    }
    net.b2 -= lr * total.b2;
}

/// Labeled context vectors drawn from the search window of each example:
/// frames inside `[t_s, t_e]` are positive, the rest negative.
#[derive(Debug, Clone, Default)]
pub struct FrameDataset {
    pub items: Vec<(Vec<f64>, f64)>,
}

impl FrameDataset {
    pub fn from_examples(
        examples: &[Example],
        norm: &NormStats,
    ) -> Result<FrameDataset, FrameModelError> {
        let mut items = Vec::new();
        for ex in examples {
            let normed = norm.apply(&ex.features);
            for t in ex.window.start..=ex.window.end {
                let ctx = build_context(&normed, t)?;
                let label = if t >= ex.onset && t <= ex.offset { 1.0 } else { 0.0 };
                items.push((ctx, label));
            }
        }
        Ok(FrameDataset { items })
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.items.iter().filter(|(_, y)| *y == 1.0).count();
        (pos, self.items.len() - pos)
    }

    /// Subsample the majority class so both classes have exactly the
    /// minority count (seeded).
    pub fn balanced(&self, rng: &mut ChaCha8Rng) -> Result<FrameDataset, FrameModelError> {
        let (pos, neg) = self.class_counts();
        if pos == 0 {
            return Err(FrameModelError::EmptyClass("positive"));
        }
        if neg == 0 {
            return Err(FrameModelError::EmptyClass("negative"));
        }
        let keep = pos.min(neg);
        let mut pos_idx: Vec<usize> = Vec::with_capacity(pos);
        let mut neg_idx: Vec<usize> = Vec::with_capacity(neg);
        for (i, (_, y)) in self.items.iter().enumerate() {
            if *y == 1.0 {
                pos_idx.push(i);
            } else {
                neg_idx.push(i);
            }
        }
        pos_idx.shuffle(rng);
        neg_idx.shuffle(rng);
        pos_idx.truncate(keep);
        neg_idx.truncate(keep);
        pos_idx.extend_from_slice(&neg_idx);
        pos_idx.sort_unstable();
        let items = pos_idx.iter().map(|&i| self.items[i].clone()).collect();
        Ok(FrameDataset { items })
    }

    pub fn mean_bce(&self, net: &FrameNet) -> f64 {
        if self.items.is_empty() {
            return 0.0;
        }
        let sum: f64 = self
            .items
            .iter()
            .map(|(x, y)| bce_loss(net.forward(x), *y))
            .sum();
        sum / self.items.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    pub decode: DecodeConfig,
}

impl Default for FrameTrainConfig {
    fn default() -> Self {
        FrameTrainConfig {
            learning_rate: 0.01,
            batch_size: 32,
            max_epochs: 150,
            patience: 10,
            dropout_rate: 0.3,
            seed: 42,
            decode: DecodeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEpochStats {
    pub epoch: usize,
    pub val_bce: f64,
    pub best_so_far: f64,
}

/// Train the frame classifier on balanced search-window frames, early
/// stopping on validation BCE and returning the best-validation snapshot.
pub fn train_frame_model(
    train: &[Example],
    validation: &[Example],
    norm: &NormStats,
    cfg: &FrameTrainConfig,
) -> Result<(FrameNet, Vec<FrameEpochStats>), FrameModelError> {
    if train.is_empty() || validation.is_empty() {
        return Err(FrameModelError::EmptyTrainingSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train_set = FrameDataset::from_examples(train, norm)?.balanced(&mut rng)?;
    let val_set = FrameDataset::from_examples(validation, norm)?.balanced(&mut rng)?;

    let mut net = FrameNet::init(cfg.seed, cfg.dropout_rate, cfg.decode);
    let mut order: Vec<usize> = (0..train_set.items.len()).collect();

    let mut best = f64::INFINITY;
    let mut best_net = net.clone();
    let mut stale = 0usize;
    let mut log = Vec::new();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch: Vec<(Vec<f64>, f64)> =
                chunk.iter().map(|&i| train_set.items[i].clone()).collect();
            train_step(&mut net, &batch, cfg.learning_rate, &mut rng);
        }
        let val = val_set.mean_bce(&net);
        if val < best {
            best = val;
            best_net = net.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        log.push(FrameEpochStats {
            epoch,
            val_bce: val,
            best_so_far: best,
        });
        if stale >= cfg.patience {
            break;
        }
    }
    Ok((best_net, log))
}

/// Centered moving average with the window shrunk at the edges; output stays
/// within the input range.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let half = (window.max(1) / 2) as isize;
    let n = xs.len() as isize;
    (0..n)
        .map(|t| {
            let a = (t - half).max(0);
            let b = (t + half).min(n - 1);
            let sum: f64 = (a..=b).map(|i| xs[i as usize]).sum();
            sum / (b - a + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeResult {
    pub onset: usize,
    pub offset: usize,
    /// False when no smoothed frame cleared the threshold and the argmax
    /// fallback produced the interval.
    pub confident: bool,
}

/// Decode a probability sequence into the longest above-threshold run.
fn decode_probs(probs: &[f64], cfg: DecodeConfig) -> DecodeResult {
    let smoothed = moving_average(probs, cfg.smooth_ms);
    let mut best: Option<(usize, usize)> = None; // (start, len)
    let mut run_start = None;
    for (i, &p) in smoothed.iter().enumerate() {
        if p >= cfg.threshold {
            if run_start.is_none() {
                run_start = Some(i);
            }
        } else if let Some(s) = run_start.take() {
            let len = i - s;
            if best.map_or(true, |(_, bl)| len > bl) {
                best = Some((s, len));
            }
        }
    }
    if let Some(s) = run_start {
        let len = smoothed.len() - s;
        if best.map_or(true, |(_, bl)| len > bl) {
            best = Some((s, len));
        }
    }
    match best {
        Some((s, len)) => DecodeResult {
            onset: s,
            offset: s + len - 1,
            confident: true,
        },
        None => {
            let mut arg = 0;
            for (i, &p) in smoothed.iter().enumerate() {
                if p > smoothed[arg] {
                    arg = i;
                }
            }
            DecodeResult {
                onset: arg,
                offset: arg,
                confident: false,
            }
        }
    }
}

/// Run the net over every frame of a normalized sequence.
pub fn frame_probabilities(
    net: &FrameNet,
    features: &FeatureSequence,
) -> Result<Vec<f64>, FrameModelError> {
    (0..features.len())
        .map(|t| build_context(features, t).map(|ctx| net.forward(&ctx)))
        .collect()
}

/// Decode the whole sequence into one onset/offset pair.
pub fn decode(net: &FrameNet, features: &FeatureSequence) -> Result<DecodeResult, FrameModelError> {
    let probs = frame_probabilities(net, features)?;
    Ok(decode_probs(&probs, net.decode))
}

/// Decode restricted to a frame range; returned indices are absolute.
pub fn decode_range(
    net: &FrameNet,
    features: &FeatureSequence,
    start: usize,
    end: usize,
) -> Result<DecodeResult, FrameModelError> {
    let end = end.min(features.len().saturating_sub(1));
    if start > end {
        return Err(FrameModelError::FrameOutOfRange {
            index: start,
            len: features.len(),
        });
    }
    let probs: Result<Vec<f64>, _> = (start..=end)
        .map(|t| build_context(features, t).map(|ctx| net.forward(&ctx)))
        .collect();
    let r = decode_probs(&probs?, net.decode);
    Ok(DecodeResult {
        onset: r.onset + start,
        offset: r.offset + start,
        confident: r.confident,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_of(rows: Vec<[f64; FEATURE_DIM]>) -> FeatureSequence {
        FeatureSequence::from_rows(rows)
    }

    #[test]
    fn context_slices_and_edges() {
        let rows: Vec<[f64; FEATURE_DIM]> = (0..10).map(|t| [t as f64; FEATURE_DIM]).collect();
        let seq = seq_of(rows);
        let c = build_context(&seq, 5).unwrap();
        assert_eq!(c.len(), INPUT_DIM);
        for (k, dt) in (-2isize..=2).enumerate() {
            let want = (5 + dt) as f64;
            assert!(c[k * FEATURE_DIM..(k + 1) * FEATURE_DIM]
                .iter()
                .all(|&v| v == want));
        }
        // t = 0: first two blocks replicate frame 0
        let c0 = build_context(&seq, 0).unwrap();
        assert!(c0[..2 * FEATURE_DIM].iter().all(|&v| v == 0.0));
        // constant sequence: all five blocks identical
        let seq = seq_of(vec![[7.0; FEATURE_DIM]; 6]);
        let cc = build_context(&seq, 3).unwrap();
        assert!(cc.iter().all(|&v| v == 7.0));
        // out of range
        assert!(matches!(
            build_context(&seq, 6),
            Err(FrameModelError::FrameOutOfRange { .. })
        ));
    }

    #[test]
    fn forward_fixed_points() {
        let net = FrameNet::zeros();
        let x = vec![0.3; INPUT_DIM];
        assert_eq!(net.forward(&x), 0.5);

        let mut net = FrameNet::zeros();
        net.b2 = 20.0;
        assert!(net.forward(&x) > 0.999);
    }

    #[test]
    fn forward_matches_independent_formula() {
        // hand-rolled re-implementation of the three-layer formula
        let net = FrameNet::init(7, 0.3, DecodeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = net.forward(&x);

        let mut z2 = net.b2;
        for i in 0..HIDDEN_DIM {
            let mut z1 = net.b1[i];
            for j in 0..INPUT_DIM {
                z1 += net.w1[i * INPUT_DIM + j] * x[j];
            }
            if z1 > 0.0 {
                z2 += net.w2[i] * z1;
            }
        }
        let want = 1.0 / (1.0 + math::exp(-z2));
        assert!((p - want).abs() < 1e-12);
    }

    #[test]
    fn bce_values() {
        assert!((bce_loss(0.5, 1.0) - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(0.5, 0.0) - core::f64::consts::LN_2).abs() < 1e-12);
        assert!(bce_loss(1.0 - 1e-9, 1.0) < 1e-6);
        assert!(bce_loss(1e-9, 0.0) < 1e-6);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..3 {
            let net = FrameNet::init(100 + trial, 0.0, DecodeConfig::default());
            let x: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = if rng.gen::<bool>() { 1.0 } else { 0.0 };
            let (_, g) = bce_gradients(&net, &x, y);
            let h = 1e-5;
            let mut check = |get: &mut dyn FnMut(&mut FrameNet) -> &mut f64, analytic: f64| {
                let mut plus = net.clone();
                *get(&mut plus) += h;
                let mut minus = net.clone();
                *get(&mut minus) -= h;
                let numeric =
                    (bce_loss(plus.forward(&x), y) - bce_loss(minus.forward(&x), y)) / (2.0 * h);
                let denom = analytic.abs().max(numeric.abs());
                if denom > 1e-8 {
                    let rel = (analytic - numeric).abs() / denom;
                    assert!(rel < 1e-4, "rel err {rel} (a={analytic}, n={numeric})");
                }
            };
            for i in [0usize, 17, HIDDEN_DIM * INPUT_DIM - 1] {
                check(&mut |n| &mut n.w1[i], g.w1[i]);
            }
            for i in [0usize, HIDDEN_DIM - 1] {
                check(&mut |n| &mut n.b1[i], g.b1[i]);
                check(&mut |n| &mut n.w2[i], g.w2[i]);
            }
            check(&mut |n| &mut n.b2, g.b2);
        }
    }

    #[test]
    fn balancing_equalizes_classes() {
        let rows: Vec<[f64; FEATURE_DIM]> = (0..100).map(|t| [t as f64 * 0.01; FEATURE_DIM]).collect();
        let ex = Example::new(
            seq_of(rows),
            40,
            50,
            crate::data::SearchWindow::new(10, 90).unwrap(),
            alloc::string::String::from("s"),
            alloc::string::String::from("w"),
        )
        .unwrap();
        let ds = FrameDataset::from_examples(&[ex], &NormStats::identity()).unwrap();
        let (pos, neg) = ds.class_counts();
        assert_eq!(pos, 11);
        assert_eq!(neg, 70);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bal = ds.balanced(&mut rng).unwrap();
        let (p2, n2) = bal.class_counts();
        assert_eq!(p2, n2);
        assert_eq!(p2, 11);
    }

    #[test]
    fn decode_longest_run_and_ties() {
        let cfg = DecodeConfig {
            smooth_ms: 1,
            threshold: 0.5,
        };
        let r = decode_probs(&[0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0], cfg);
        assert_eq!((r.onset, r.offset, r.confident), (2, 4, true));

        let r = decode_probs(&[1.0, 1.0, 0.0, 1.0, 1.0], cfg);
        assert_eq!((r.onset, r.offset), (0, 1)); // earliest of equal runs

        let r = decode_probs(&[0.1, 0.4, 0.2], cfg);
        assert_eq!((r.onset, r.offset, r.confident), (1, 1, false));
    }

    #[test]
    fn moving_average_stays_in_range() {
        let xs = [0.0, 1.0, 0.25, 0.75, 1.0, 0.0, 0.5];
        let sm = moving_average(&xs, 5);
        assert_eq!(sm.len(), xs.len());
        for v in sm {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn training_separates_toy_frames() {
        // linearly separable by feature 0 of the center frame
        let mut rows_pos = Vec::new();
        let mut rows_neg = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let mut p = [0.0; FEATURE_DIM];
            let mut n = [0.0; FEATURE_DIM];
            for j in 0..FEATURE_DIM {
                p[j] = rng.gen_range(-0.2..0.2) + 1.0;
                n[j] = rng.gen_range(-0.2..0.2) - 1.0;
            }
            rows_pos.push(p);
            rows_neg.push(n);
        }
        // an example whose window holds 30 frames of each population, so
        // the class balancer keeps every frame
        let mut rows = Vec::new();
        rows.extend_from_slice(&rows_neg[..30]);
        rows.extend_from_slice(&rows_pos[..30]);
        rows.extend_from_slice(&rows_neg[30..]);
        let ex = Example::new(
            seq_of(rows),
            30,
            59,
            crate::data::SearchWindow::new(15, 74).unwrap(),
            alloc::string::String::from("s"),
            alloc::string::String::from("w"),
        )
        .unwrap();
        let cfg = FrameTrainConfig {
            max_epochs: 200,
            patience: 200,
            dropout_rate: 0.0,
            learning_rate: 0.5,
            ..Default::default()
        };
        let (net, log) =
            train_frame_model(&[ex.clone()], &[ex.clone()], &NormStats::identity(), &cfg).unwrap();
        let ds = FrameDataset::from_examples(&[ex], &NormStats::identity()).unwrap();
        let correct = ds
            .items
            .iter()
            .filter(|(x, y)| (net.forward(x) >= 0.5) == (*y == 1.0))
            .count();
        let acc = correct as f64 / ds.items.len() as f64;
        assert!(acc >= 0.99, "accuracy {acc}");
        // best-validation snapshot is no worse than the final epoch
        let last = log.last().unwrap();
        assert!(last.best_so_far <= last.val_bce);
    }

    #[test]
    fn training_deterministic_under_seed() {
        let rows: Vec<[f64; FEATURE_DIM]> = (0..80)
            .map(|t| {
                let mut r = [0.0; FEATURE_DIM];
                for j in 0..FEATURE_DIM {
                    r[j] = math::sin(0.3 * t as f64 + j as f64);
                }
                r
            })
            .collect();
        let ex = Example::new(
            seq_of(rows),
            30,
            50,
            crate::data::SearchWindow::new(0, 79).unwrap(),
            alloc::string::String::from("s"),
            alloc::string::String::from("w"),
        )
        .unwrap();
        let cfg = FrameTrainConfig {
            max_epochs: 5,
            ..Default::default()
        };
        let (n1, _) =
            train_frame_model(&[ex.clone()], &[ex.clone()], &NormStats::identity(), &cfg).unwrap();
        let (n2, _) =
            train_frame_model(&[ex.clone()], &[ex.clone()], &NormStats::identity(), &cfg).unwrap();
        assert_eq!(n1, n2);
    }
}
