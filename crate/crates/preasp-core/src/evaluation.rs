//! Metrics and split protocols: tolerance tables, boundary MAE, duration
//! statistics, Pearson correlation, k-fold and leave-one-speaker-out splits.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction/gold counts differ: {preds} vs {golds}")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error("k-fold needs 2 <= k <= n (k={k}, n={n})")]
    BadK { k: usize, n: usize },
    #[error("leave-one-speaker-out needs at least 2 distinct speakers")]
    TooFewSpeakers,
}

/// A timing pair in milliseconds (onset, offset).
pub type TimingPair = (f64, f64);

/// What "within tolerance" means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToleranceMode {
    /// |predicted duration − gold duration| ≤ θ (matches the task loss).
    #[default]
    Duration,
    /// Both |Δt_s| ≤ θ and |Δt_e| ≤ θ.
    Boundaries,
}

/// Default tolerance thresholds in ms.
pub const DEFAULT_THRESHOLDS_MS: [f64; 4] = [5.0, 10.0, 15.0, 20.0];

fn check_lengths(preds: &[TimingPair], golds: &[TimingPair]) -> Result<(), EvalError> {
    if preds.len() != golds.len() || preds.is_empty() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    Ok(())
}

/// Percent of examples within each tolerance threshold.
pub fn tolerance_accuracy(
    preds: &[TimingPair],
    golds: &[TimingPair],
    thresholds_ms: &[f64],
    mode: ToleranceMode,
) -> Result<Vec<f64>, EvalError> {
    check_lengths(preds, golds)?;
    let n = preds.len() as f64;
    Ok(thresholds_ms
        .iter()
        .map(|&th| {
            let hits = preds
                .iter()
                .zip(golds.iter())
                .filter(|(p, g)| match mode {
                    ToleranceMode::Duration => {
                        ((p.1 - p.0) - (g.1 - g.0)).abs() <= th
                    }
                    ToleranceMode::Boundaries => {
                        (p.0 - g.0).abs() <= th && (p.1 - g.1).abs() <= th
                    }
                })
                .count();
            100.0 * hits as f64 / n
        })
        .collect())
}

/// Mean absolute onset and offset errors in ms.
pub fn boundary_mae(preds: &[TimingPair], golds: &[TimingPair]) -> Result<(f64, f64), EvalError> {
    check_lengths(preds, golds)?;
    let n = preds.len() as f64;
    let mut onset = 0.0;
    let mut offset = 0.0;
    for (p, g) in preds.iter().zip(golds.iter()) {
        onset += (p.0 - g.0).abs();
        offset += (p.1 - g.1).abs();
    }
    Ok((onset / n, offset / n))
}

/// Sample mean and sample standard deviation (n−1) of durations in ms.
pub fn duration_stats(pairs: &[TimingPair]) -> Result<(f64, f64), EvalError> {
    if pairs.len() < 2 {
        return Err(EvalError::TooFew {
            need: 2,
            got: pairs.len(),
        });
    }
    let durs: Vec<f64> = pairs.iter().map(|(s, e)| e - s).collect();
    let n = durs.len() as f64;
    let mean = durs.iter().sum::<f64>() / n;
    let ss: f64 = durs.iter().map(|d| (d - mean) * (d - mean)).sum();
    Ok((mean, math::sqrt(ss / (n - 1.0))))
}

/// Pearson product-moment correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            preds: a.len(),
            golds: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(EvalError::TooFew {
            need: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok(cov / math::sqrt(va * vb))
}

/// Full report over a prediction/gold set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub thresholds_ms: Vec<f64>,
    pub tolerance_pct: Vec<f64>,
    pub onset_mae_ms: f64,
    pub offset_mae_ms: f64,
    pub pred_dur_mean_ms: f64,
    pub pred_dur_std_ms: f64,
    pub gold_dur_mean_ms: f64,
    pub gold_dur_std_ms: f64,
    /// Pearson r between predicted and gold durations; `None` when one side
    /// has zero variance.
    pub pearson_r: Option<f64>,
    pub examples: usize,
}

pub fn evaluate(
    preds: &[TimingPair],
    golds: &[TimingPair],
    thresholds_ms: &[f64],
    mode: ToleranceMode,
) -> Result<EvalReport, EvalError> {
    check_lengths(preds, golds)?;
    let tolerance_pct = tolerance_accuracy(preds, golds, thresholds_ms, mode)?;
    let (onset_mae_ms, offset_mae_ms) = boundary_mae(preds, golds)?;
    let (pred_dur_mean_ms, pred_dur_std_ms) = duration_stats(preds)?;
    let (gold_dur_mean_ms, gold_dur_std_ms) = duration_stats(golds)?;
    let pd: Vec<f64> = preds.iter().map(|(s, e)| e - s).collect();
    let gd: Vec<f64> = golds.iter().map(|(s, e)| e - s).collect();
    let pearson_r = match pearson(&pd, &gd) {
        Ok(r) => Some(r),
        Err(EvalError::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        thresholds_ms: thresholds_ms.to_vec(),
        tolerance_pct,
        onset_mae_ms,
        offset_mae_ms,
        pred_dur_mean_ms,
        pred_dur_std_ms,
        gold_dur_mean_ms,
        gold_dur_std_ms,
        pearson_r,
        examples: preds.len(),
    })
}

/// One train/validation/test split, as indices into the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    /// Human-readable fold label ("fold0", or the held-out speaker).
    pub label: String,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded k-fold split with a validation share carved from each fold's
/// training part. Test partitions are disjoint and cover the dataset.
pub fn kfold_split(
    n: usize,
    k: usize,
    val_fraction: f64,
    seed: u64,
) -> Result<Vec<Fold>, EvalError> {
    if k < 2 || n < k {
        return Err(EvalError::BadK { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    // chunk sizes differ by at most one; the first n % k folds get the extra
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0usize;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let test: Vec<usize> = order[at..at + size].to_vec();
        let mut rest: Vec<usize> = order[..at].to_vec();
        rest.extend_from_slice(&order[at + size..]);
        let n_val = (val_fraction * rest.len() as f64) as usize;
        let validation = rest[..n_val].to_vec();
        let train = rest[n_val..].to_vec();
        folds.push(Fold {
            label: {
                use alloc::format;
                format!("fold{f}")
            },
            train,
            validation,
            test,
        });
        at += size;
    }
    Ok(folds)
}

/// Plain seeded train/validation holdout (no test part). The validation set
/// gets at least one item and never swallows the whole dataset.
pub fn holdout_split(
    n: usize,
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if n < 2 {
        return Err(EvalError::TooFew { need: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_val = ((val_fraction * n as f64) as usize).clamp(1, n - 1);
    let validation = order[..n_val].to_vec();
    let train = order[n_val..].to_vec();
    Ok((train, validation))
}

/// One fold per distinct speaker: that speaker's examples form the test set,
/// everyone else trains (with a seeded validation share).
pub fn loso_split(
    speakers: &[String],
    val_fraction: f64,
    seed: u64,
) -> Result<Vec<Fold>, EvalError> {
    let mut unique: Vec<&String> = Vec::new();
    for s in speakers {
        if !unique.contains(&s) {
            unique.push(s);
        }
    }
    unique.sort();
    if unique.len() < 2 {
        return Err(EvalError::TooFewSpeakers);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = Vec::with_capacity(unique.len());
    for spk in unique {
        let test: Vec<usize> = (0..speakers.len())
            .filter(|&i| &speakers[i] == spk)
            .collect();
        let mut rest: Vec<usize> = (0..speakers.len())
            .filter(|&i| &speakers[i] != spk)
            .collect();
        rest.shuffle(&mut rng);
        let n_val = (val_fraction * rest.len() as f64) as usize;
        folds.push(Fold {
            label: spk.clone(),
            train: rest[n_val..].to_vec(),
            validation: rest[..n_val].to_vec(),
            test,
        });
    }
    Ok(folds)
}
