//! Acoustic front-end: 8 per-millisecond features from a mono waveform.
//!
//! Every frame (1 ms hop) carries, in this order:
//!
//! | idx | name       | description                                          |
//! |-----|------------|------------------------------------------------------|
//! | 0   | `E_total`  | log total spectral power (5 ms Hamming STFT)         |
//! | 1   | `E_low`    | log power in 50–1000 Hz                              |
//! | 2   | `E_high`   | log power above 3000 Hz                              |
//! | 3   | `H_wiener` | Wiener entropy (log geometric/arithmetic mean ratio) |
//! | 4   | `P_max`    | max log power over frames −6 ms .. +18 ms            |
//! | 5   | `R_l`      | pitch in Hz (0 when unvoiced)                        |
//! | 6   | `V`        | voicing decision smoothed with a 5 ms Hamming kernel |
//! | 7   | `ZC`       | zero crossings in a 5 ms window                      |
//!
//! All log-power quantities are floored at [`LOG_FLOOR`] before the natural
//! log so silent frames stay finite. Windows that overrun the signal bounds
//! replicate the first/last sample, which keeps the frame count a pure
//! function of the duration: a waveform of `d` ms yields `floor(d)` frames,
//! frame `t` centered at `t` ms.
//!
//! Pitch and voicing share one normalized-autocorrelation core (25 ms
//! window, 60–400 Hz search, voicing threshold 0.45 by default). This is a
//! deliberately plain detector: the features act as coarse voicing cues, not
//! as a reference pitch tracker.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::fft::{next_pow2, Fft};
use crate::math;

/// Features per frame.
pub const FEATURE_DIM: usize = 8;

/// Canonical column order of [`FeatureSequence`].
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "E_total", "E_low", "E_high", "H_wiener", "P_max", "R_l", "V", "ZC",
];

pub const E_TOTAL: usize = 0;
pub const E_LOW: usize = 1;
pub const E_HIGH: usize = 2;
pub const H_WIENER: usize = 3;
pub const P_MAX: usize = 4;
pub const R_L: usize = 5;
pub const V: usize = 6;
pub const ZC: usize = 7;

/// Power floor applied before every logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// Frame hop in milliseconds (fixed).
pub const HOP_MS: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum AcousticsError {
    #[error("waveform has no samples")]
    EmptySignal,
    #[error("sample rate {0} Hz is below the 8000 Hz minimum")]
    SampleRateTooLow(u32),
    #[error("waveform too short: {duration_ms:.3} ms (need at least {min_ms} ms)")]
    TooShort { duration_ms: f64, min_ms: f64 },
    #[error("inverted frequency band: [{lo_hz}, {hi_hz}] Hz")]
    InvertedBand { lo_hz: f64, hi_hz: f64 },
    #[error("cannot fit normalization stats on empty data")]
    NoData,
}

/// Mono waveform. Construction validates the invariants every other routine
/// in the crate relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

/// Shortest analysis window; waveforms must cover at least this much.
pub const MIN_DURATION_MS: f64 = 5.0;

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AcousticsError> {
        if samples.is_empty() {
            return Err(AcousticsError::EmptySignal);
        }
        if sample_rate < 8000 {
            return Err(AcousticsError::SampleRateTooLow(sample_rate));
        }
        let duration_ms = samples.len() as f64 * 1000.0 / sample_rate as f64;
        if duration_ms < MIN_DURATION_MS {
            return Err(AcousticsError::TooShort {
                duration_ms,
                min_ms: MIN_DURATION_MS,
            });
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate as f64
    }

    /// Number of 1 ms feature frames: `floor(duration_ms)`.
    pub fn num_frames(&self) -> usize {
        (self.samples.len() as u64 * 1000 / self.sample_rate as u64) as usize
    }

    /// Sample index of the frame center at `ms` milliseconds.
    fn center_sample(&self, ms: f64) -> isize {
        math::round(ms * self.sample_rate as f64 / 1000.0) as isize
    }

    fn window_samples(&self, window_ms: f64) -> usize {
        (math::round(window_ms * self.sample_rate as f64 / 1000.0) as usize).max(1)
    }

    /// Sample with edge replication outside the signal bounds.
    fn sample_at(&self, i: isize) -> f64 {
        let n = self.samples.len() as isize;
        let i = i.clamp(0, n - 1);
        self.samples[i as usize]
    }

    /// Copy the window of `len` samples centered on `center_ms` into `buf`,
    /// replicating edges.
    fn fill_window(&self, center_ms: f64, len: usize, buf: &mut [f64]) {
        let start = self.center_sample(center_ms) - (len / 2) as isize;
        for (j, slot) in buf.iter_mut().enumerate().take(len) {
            *slot = self.sample_at(start + j as isize);
        }
    }
}

/// T×8 feature matrix at 1 ms hop.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    rows: Vec<[f64; FEATURE_DIM]>,
}

impl FeatureSequence {
    pub fn from_rows(rows: Vec<[f64; FEATURE_DIM]>) -> Self {
        FeatureSequence { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64; FEATURE_DIM] {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[[f64; FEATURE_DIM]] {
        &self.rows
    }

    pub fn get(&self, t: usize, feature: usize) -> f64 {
        self.rows[t][feature]
    }
}

/// Per-feature z-score statistics, fit on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl NormStats {
    /// No-op stats (mean 0, std 1); handy for tests and raw-feature paths.
    pub fn identity() -> Self {
        NormStats {
            mean: [0.0; FEATURE_DIM],
            std: [1.0; FEATURE_DIM],
        }
    }

    /// Population mean/std per feature over all frames of all sequences.
    /// Degenerate features (zero variance) get std 1 so z-scoring is a no-op
    /// shift for them.
    pub fn fit(sequences: &[FeatureSequence]) -> Result<Self, AcousticsError> {
        let total: usize = sequences.iter().map(|s| s.len()).sum();
        if total == 0 {
            return Err(AcousticsError::NoData);
        }
        let mut mean = [0.0; FEATURE_DIM];
        for seq in sequences {
            for row in seq.rows() {
                for (m, v) in mean.iter_mut().zip(row.iter()) {
                    *m += v;
                }
            }
        }
        for m in mean.iter_mut() {
            *m /= total as f64;
        }
        let mut var = [0.0; FEATURE_DIM];
        for seq in sequences {
            for row in seq.rows() {
                for j in 0..FEATURE_DIM {
                    let d = row[j] - mean[j];
                    var[j] += d * d;
                }
            }
        }
        let mut std = [0.0; FEATURE_DIM];
        for j in 0..FEATURE_DIM {
            let s = math::sqrt(var[j] / total as f64);
            std[j] = if s < 1e-12 { 1.0 } else { s };
        }
        Ok(NormStats { mean, std })
    }

    /// z-score every frame.
    pub fn apply(&self, seq: &FeatureSequence) -> FeatureSequence {
        let rows = seq
            .rows()
            .iter()
            .map(|row| {
                let mut out = [0.0; FEATURE_DIM];
                for j in 0..FEATURE_DIM {
                    out[j] = (row[j] - self.mean[j]) / self.std[j];
                }
                out
            })
            .collect();
        FeatureSequence { rows }
    }
}

/// Tunables of the front-end. Defaults implement the documented behaviour;
/// the pitch/voicing settings are exposed because the detector is a stand-in.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    /// STFT analysis window (ms).
    pub stft_window_ms: f64,
    /// Low band for `E_low` (Hz).
    pub low_band_hz: (f64, f64),
    /// Lower edge of the open `E_high` band (upper edge is Nyquist).
    pub high_band_lo_hz: f64,
    /// `P_max` region relative to the frame center (ms).
    pub pmax_region_ms: (f64, f64),
    /// Autocorrelation window for pitch/voicing (ms).
    pub pitch_window_ms: f64,
    /// Pitch search range (Hz).
    pub pitch_range_hz: (f64, f64),
    /// Minimum peak normalized autocorrelation for a voiced decision.
    pub voicing_threshold: f64,
    /// Length of the Hamming kernel smoothing the voicing track (ms).
    pub voicing_smooth_ms: usize,
    /// Zero-crossing window (ms).
    pub zc_window_ms: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            stft_window_ms: 5.0,
            low_band_hz: (50.0, 1000.0),
            high_band_lo_hz: 3000.0,
            pmax_region_ms: (-6.0, 18.0),
            pitch_window_ms: 25.0,
            pitch_range_hz: (60.0, 400.0),
            voicing_threshold: 0.45,
            voicing_smooth_ms: 5,
            zc_window_ms: 5.0,
        }
    }
}

fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| {
            0.54 - 0.46 * math::cos(2.0 * core::f64::consts::PI * n as f64 / (len - 1) as f64)
        })
        .collect()
}

/// Power spectrum of the Hamming-windowed segment centered at `center_ms`.
///
/// The FFT size is the next power of two at or above the window length, so
/// the result has `fft_size/2 + 1` bins. Windows that overrun the signal
/// replicate the edge samples.
pub fn stft_power(waveform: &Waveform, center_ms: f64, window_ms: f64) -> Vec<f64> {
    let len = waveform.window_samples(window_ms);
    let fft = Fft::new(next_pow2(len));
    let window = hamming(len);
    stft_power_with(waveform, center_ms, &window, &fft)
}

fn stft_power_with(waveform: &Waveform, center_ms: f64, window: &[f64], fft: &Fft) -> Vec<f64> {
    let len = window.len();
    let mut frame = vec![0.0; len];
    waveform.fill_window(center_ms, len, &mut frame);
    for (x, w) in frame.iter_mut().zip(window.iter()) {
        *x *= w;
    }
    fft.power_spectrum(&frame)
}

/// Log power summed over the bins whose center frequency lies in
/// `[lo_hz, hi_hz]` (inclusive). Floored at [`LOG_FLOOR`] before the log.
pub fn band_energy(
    spectrum: &[f64],
    lo_hz: f64,
    hi_hz: f64,
    sample_rate: u32,
) -> Result<f64, AcousticsError> {
    if lo_hz >= hi_hz {
        return Err(AcousticsError::InvertedBand { lo_hz, hi_hz });
    }
    let fft_size = 2 * (spectrum.len() - 1);
    let mut sum = 0.0;
    for (k, &p) in spectrum.iter().enumerate() {
        let f = k as f64 * sample_rate as f64 / fft_size as f64;
        if f >= lo_hz && f <= hi_hz {
            sum += p;
        }
    }
    Ok(math::ln(sum.max(LOG_FLOOR)))
}

fn total_energy(spectrum: &[f64]) -> f64 {
    let sum: f64 = spectrum.iter().sum();
    math::ln(sum.max(LOG_FLOOR))
}

/// Wiener entropy: log of the ratio of geometric to arithmetic mean of the
/// floored power bins. 0 exactly for a flat spectrum (the AM-GM equality
/// case), negative otherwise; clamped so rounding never pushes it positive.
pub fn wiener_entropy(spectrum: &[f64]) -> f64 {
    wiener_entropy_floored(spectrum, LOG_FLOOR)
}

fn wiener_entropy_floored(spectrum: &[f64], floor: f64) -> f64 {
    let first = spectrum[0].max(floor);
    if spectrum.iter().all(|&p| p.max(floor) == first) {
        return 0.0;
    }
    let n = spectrum.len() as f64;
    let mut log_sum = 0.0;
    let mut sum = 0.0;
    for &p in spectrum {
        let b = p.max(floor);
        log_sum += math::ln(b);
        sum += b;
    }
    (log_sum / n - math::ln(sum / n)).min(0.0)
}

/// Max log total power over 1 ms-spaced frames in the region
/// `center_ms + pmax_region`, clamped to the frame grid.
pub fn max_power(waveform: &Waveform, center_ms: f64) -> f64 {
    let cfg = FeatureConfig::default();
    let len = waveform.window_samples(cfg.stft_window_ms);
    let fft = Fft::new(next_pow2(len));
    let window = hamming(len);
    let last = (waveform.num_frames().saturating_sub(1)) as f64;
    let (lo, hi) = cfg.pmax_region_ms;
    let mut best = f64::NEG_INFINITY;
    let mut k = lo;
    while k <= hi + 1e-9 {
        let c = (center_ms + k).clamp(0.0, last);
        let p = total_energy(&stft_power_with(waveform, c, &window, &fft));
        if p > best {
            best = p;
        }
        k += 1.0;
    }
    best
}

/// Shared normalized-autocorrelation pass (25 ms window by default).
///
/// Returns `(pitch_hz, voiced)` per 1 ms frame: the pitch is `sr/lag` of the
/// best lag in the search range when its normalized correlation clears the
/// voicing threshold, else 0; `voiced` is the raw binary decision.
fn autocorr_tracks(waveform: &Waveform, cfg: &FeatureConfig) -> (Vec<f64>, Vec<f64>) {
    let t_len = waveform.num_frames();
    let sr = waveform.sample_rate as f64;
    let w = waveform.window_samples(cfg.pitch_window_ms);
    let lag_min = (math::floor(sr / cfg.pitch_range_hz.1) as usize).max(1);
    let lag_max = (libm::ceil(sr / cfg.pitch_range_hz.0) as usize).min(w.saturating_sub(1));

    // Pad with edge replication so every analysis window is in bounds.
    let pad = w;
    let n = waveform.samples.len();
    let p_len = n + 2 * pad;
    let mut padded = Vec::with_capacity(p_len);
    padded.resize(pad, waveform.samples[0]);
    padded.extend_from_slice(&waveform.samples);
    padded.resize(p_len, waveform.samples[n - 1]);

    // Window start per frame, in padded coordinates.
    let starts: Vec<usize> = (0..t_len)
        .map(|t| {
            let c = waveform.center_sample(t as f64) + pad as isize;
            (c - (w / 2) as isize).max(0) as usize
        })
        .collect();

    // Energy prefix sums over the padded signal.
    let mut energy = Vec::with_capacity(p_len + 1);
    energy.push(0.0);
    let mut acc = 0.0;
    for &x in &padded {
        acc += x * x;
        energy.push(acc);
    }

    // Correlation per (frame, lag). One product-prefix array per lag gives
    // an O(1) numerator per frame and O(len) working memory.
    let n_lags = lag_max + 1 - lag_min;
    let mut corr = vec![0.0f64; t_len * n_lags];
    let mut prod = vec![0.0f64; p_len + 1];
    for lag in lag_min..=lag_max {
        let m = p_len - lag;
        let mut acc = 0.0;
        for i in 0..m {
            acc += padded[i] * padded[i + lag];
            prod[i + 1] = acc;
        }
        let col = lag - lag_min;
        for t in 0..t_len {
            let s = starts[t];
            let overlap = w - lag;
            let num = prod[s + overlap] - prod[s];
            let e1 = energy[s + overlap] - energy[s];
            let e2 = energy[s + w] - energy[s + lag];
            if e1 > 0.0 && e2 > 0.0 {
                corr[t * n_lags + col] = num / math::sqrt(e1 * e2);
            }
        }
    }

    // A periodic signal correlates equally well at multiples of its period;
    // take the smallest local-maximum lag within a margin of the frame's
    // peak so subharmonics do not halve the pitch.
    const PEAK_MARGIN: f64 = 0.05;
    let mut pitch = vec![0.0; t_len];
    let mut voiced = vec![0.0; t_len];
    for t in 0..t_len {
        let row = &corr[t * n_lags..(t + 1) * n_lags];
        let peak = row.iter().cloned().fold(0.0f64, f64::max);
        if peak < cfg.voicing_threshold {
            continue;
        }
        let is_local_max = |c: usize| -> bool {
            let left_ok = c == 0 || row[c] >= row[c - 1];
            let right_ok = c + 1 == n_lags || row[c] >= row[c + 1];
            left_ok && right_ok
        };
        let col = (0..n_lags)
            .find(|&c| row[c] >= peak - PEAK_MARGIN && is_local_max(c))
            .unwrap_or(0);
        pitch[t] = sr / (lag_min + col) as f64;
        voiced[t] = 1.0;
    }
    (pitch, voiced)
}

/// Per-frame pitch estimate in Hz (0 where unvoiced).
pub fn pitch_track(waveform: &Waveform, cfg: &FeatureConfig) -> Vec<f64> {
    autocorr_tracks(waveform, cfg).0
}

/// Per-frame voicing in [0, 1]: binary decision smoothed with a normalized
/// Hamming kernel (replicated edges).
pub fn voicing_track(waveform: &Waveform, cfg: &FeatureConfig) -> Vec<f64> {
    let raw = autocorr_tracks(waveform, cfg).1;
    smooth_hamming(&raw, cfg.voicing_smooth_ms)
}

fn smooth_hamming(track: &[f64], kernel_ms: usize) -> Vec<f64> {
    let k = kernel_ms.max(1);
    let mut kernel = hamming(k);
    let sum: f64 = kernel.iter().sum();
    for v in kernel.iter_mut() {
        *v /= sum;
    }
    let n = track.len() as isize;
    let half = (k / 2) as isize;
    (0..n)
        .map(|t| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &kv)| {
                    let i = (t + j as isize - half).clamp(0, n - 1);
                    kv * track[i as usize]
                })
                .sum()
        })
        .collect()
}

/// Sign changes between consecutive samples in the window centered at
/// `center_ms` (clamped to the signal). Zero samples inherit the previous
/// sign, so runs of zeros never count as crossings.
pub fn zero_crossings(waveform: &Waveform, center_ms: f64, window_ms: f64) -> usize {
    let len = waveform.window_samples(window_ms);
    let n = waveform.samples.len() as isize;
    let mut start = waveform.center_sample(center_ms) - (len / 2) as isize;
    let mut end = start + len as isize;
    start = start.max(0);
    end = end.min(n);
    let mut count = 0;
    let mut sign = 0i8;
    for i in start..end {
        let x = waveform.samples[i as usize];
        let s = if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            sign
        };
        if sign != 0 && s != 0 && s != sign {
            count += 1;
        }
        if s != 0 {
            sign = s;
        }
    }
    count
}

/// Full feature extraction: all eight features for every 1 ms frame.
pub fn extract_features(
    waveform: &Waveform,
    cfg: &FeatureConfig,
) -> Result<FeatureSequence, AcousticsError> {
    let t_len = waveform.num_frames();
    let sr = waveform.sample_rate;

    let len = waveform.window_samples(cfg.stft_window_ms);
    let fft = Fft::new(next_pow2(len));
    let window = hamming(len);
    let nyquist = sr as f64 / 2.0;

    let mut e_total = Vec::with_capacity(t_len);
    let mut e_low = Vec::with_capacity(t_len);
    let mut e_high = Vec::with_capacity(t_len);
    let mut wiener = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let spec = stft_power_with(waveform, t as f64, &window, &fft);
        e_total.push(total_energy(&spec));
        e_low.push(band_energy(&spec, cfg.low_band_hz.0, cfg.low_band_hz.1, sr)?);
        e_high.push(band_energy(&spec, cfg.high_band_lo_hz, nyquist, sr)?);
        wiener.push(wiener_entropy(&spec));
    }

    // P_max over E_total on the same frame grid.
    let lo = cfg.pmax_region_ms.0 as isize;
    let hi = cfg.pmax_region_ms.1 as isize;
    let p_max: Vec<f64> = (0..t_len as isize)
        .map(|t| {
            let a = (t + lo).clamp(0, t_len as isize - 1) as usize;
            let b = (t + hi).clamp(0, t_len as isize - 1) as usize;
            e_total[a..=b].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let (pitch, voiced_raw) = autocorr_tracks(waveform, cfg);
    let voicing = smooth_hamming(&voiced_raw, cfg.voicing_smooth_ms);

    let rows = (0..t_len)
        .map(|t| {
            [
                e_total[t],
                e_low[t],
                e_high[t],
                wiener[t],
                p_max[t],
                pitch[t],
                voicing[t],
                zero_crossings(waveform, t as f64, cfg.zc_window_ms) as f64,
            ]
        })
        .collect();
    Ok(FeatureSequence { rows })
}
