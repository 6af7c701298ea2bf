//! Seeded generator of vowel → pre-aspiration → closure(→ burst) tokens with
//! exactly known boundaries.
//!
//! The original recordings are not distributable, so this generator stands in
//! as the ground-truth oracle for end-to-end verification: every token's
//! onset/offset is known by construction, and the acoustic cues the feature
//! maps measure hold by design (high-passed aspiration noise carries the
//! high-frequency energy, the vowel is periodic and voiced, the closure is
//! near-silent).
//!
//! Segments are joined with 5 ms raised-cosine cross-fades; a boundary is
//! defined at the cross-fade midpoint and lands on the 1 ms feature grid.
//! Durations are drawn from a truncated normal whose location is calibrated
//! so the post-truncation mean hits the configured mean. Each speaker gets a
//! systematic f0 and duration-mean offset (offsets centered across speakers)
//! so leave-one-speaker-out evaluation measures real generalization.
//!
//! Per-token RNG streams split deterministically from the corpus seed, so
//! generation is reproducible token by token and parallelizable.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acoustics::Waveform;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub sample_rate: u32,
    /// Vowel duration range (ms).
    pub vowel_ms: (f64, f64),
    /// Target mean/std of pre-aspiration duration (ms).
    pub preasp_mean_ms: f64,
    pub preasp_std_ms: f64,
    /// Hard truncation of the duration distribution (ms).
    pub preasp_range_ms: (f64, f64),
    /// Closure duration range (ms); the minimum keeps a 60 ms tail after the
    /// offset so post-offset feature windows see real signal.
    pub closure_ms: (f64, f64),
    pub burst_prob: f64,
    /// Speaker base f0 draws from this range (Hz).
    pub f0_range_hz: (f64, f64),
    /// High-pass cutoff shaping the aspiration noise (Hz).
    pub noise_hp_hz: f64,
    /// Per-token amplitude scale range (amplitude jitter).
    pub amp_range: (f64, f64),
    /// Background-noise SNR range relative to the vowel (dB).
    pub snr_db: (f64, f64),
    /// Aspiration RMS as a fraction of the token amplitude, drawn per token.
    pub asp_level: (f64, f64),
    /// Residual voicing decay into the aspiration (ms): the vowel fades out
    /// over this span after the onset, like breathy voice offset.
    pub breathy_ms: (f64, f64),
    /// Aspiration fade-out span into the closure (ms).
    pub offset_blur_ms: (f64, f64),
    pub speakers: usize,
    /// Std of the per-speaker duration-mean offset (ms); realized offsets
    /// are centered so the corpus mean stays at `preasp_mean_ms`.
    pub speaker_dur_sd_ms: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            sample_rate: 16000,
            vowel_ms: (80.0, 160.0),
            preasp_mean_ms: 37.6,
            preasp_std_ms: 20.8,
            preasp_range_ms: (8.0, 120.0),
            closure_ms: (62.0, 110.0),
            burst_prob: 0.5,
            f0_range_hz: (100.0, 240.0),
            noise_hp_hz: 3000.0,
            amp_range: (0.5, 1.0),
            snr_db: (18.0, 32.0),
            asp_level: (0.05, 0.12),
            breathy_ms: (8.0, 25.0),
            offset_blur_ms: (4.0, 12.0),
            speakers: 8,
            speaker_dur_sd_ms: 6.0,
            seed: 42,
        }
    }
}

/// One synthesized token with exact gold boundaries (ms, on the frame grid).
#[derive(Debug, Clone)]
pub struct SynthToken {
    pub waveform: Waveform,
    pub onset_ms: f64,
    pub offset_ms: f64,
    pub speaker: String,
    pub word: String,
    pub window_start_ms: f64,
    pub window_end_ms: f64,
}

/// Systematic per-speaker parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerProfile {
    pub id: String,
    pub f0_hz: f64,
    /// This speaker's target mean pre-aspiration duration (ms).
    pub dur_mean_ms: f64,
    /// Calibrated location of the underlying normal (see
    /// [`calibrate_truncnorm_location`]).
    dur_loc_ms: f64,
}

/// Mean of N(loc, sd) truncated to [lo, hi].
fn truncnorm_mean(loc: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let a = (lo - loc) / sd;
    let b = (hi - loc) / sd;
    let z = math::norm_cdf(b) - math::norm_cdf(a);
    loc + sd * (math::norm_pdf(a) - math::norm_pdf(b)) / z
}

/// Location `loc` such that N(loc, sd) truncated to [lo, hi] has the target
/// mean. Bisection; the truncated mean is strictly increasing in `loc`.
fn calibrate_truncnorm_location(target: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let mut a = target - 6.0 * sd;
    let mut b = target + 6.0 * sd;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if truncnorm_mean(mid, sd, lo, hi) < target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    0.5 * (a + b)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 kept away from zero
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
}

fn sample_truncnorm(rng: &mut ChaCha8Rng, loc: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    loop {
        let x = loc + sd * standard_normal(rng);
        if x >= lo && x <= hi {
            return x;
        }
    }
}

/// Draw the per-speaker profiles from stream 0 of the corpus seed. Duration
/// offsets are centered so they cancel across speakers.
pub fn speaker_profiles(params: &GenParams) -> Vec<SpeakerProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(0);
    let n = params.speakers.max(1);
    let f0s: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(params.f0_range_hz.0..params.f0_range_hz.1))
        .collect();
    let mut offsets: Vec<f64> = (0..n)
        .map(|_| params.speaker_dur_sd_ms * standard_normal(&mut rng))
        .collect();
    let mean_off = offsets.iter().sum::<f64>() / n as f64;
    for o in offsets.iter_mut() {
        *o -= mean_off;
    }
    let (lo, hi) = params.preasp_range_ms;
    (0..n)
        .map(|i| {
            let target = (params.preasp_mean_ms + offsets[i]).clamp(lo + 2.0, hi - 2.0);
            SpeakerProfile {
                id: format!("spk{i:02}"),
                f0_hz: f0s[i],
                dur_mean_ms: target,
                dur_loc_ms: calibrate_truncnorm_location(target, params.preasp_std_ms, lo, hi),
            }
        })
        .collect()
}

/// Two-pole resonator, RMS-normalized afterwards by the caller.
fn resonator(input: &[f64], freq: f64, bandwidth: f64, sr: f64) -> Vec<f64> {
    let r = math::exp(-core::f64::consts::PI * bandwidth / sr);
    let theta = 2.0 * core::f64::consts::PI * freq / sr;
    let a1 = 2.0 * r * math::cos(theta);
    let a2 = -r * r;
    let mut out = vec![0.0; input.len()];
    let mut y1 = 0.0;
    let mut y2 = 0.0;
    for (o, &x) in out.iter_mut().zip(input.iter()) {
        let y = x + a1 * y1 + a2 * y2;
        *o = y;
        y2 = y1;
        y1 = y;
    }
    out
}

/// RBJ high-pass biquad (Q = 1/√2), applied in place.
fn highpass(buf: &mut [f64], cutoff: f64, sr: f64) {
    let omega = 2.0 * core::f64::consts::PI * cutoff / sr;
    let (sin_w, cos_w) = (math::sin(omega), math::cos(omega));
    let q = core::f64::consts::FRAC_1_SQRT_2;
    let alpha = sin_w / (2.0 * q);
    let b0 = (1.0 + cos_w) / 2.0;
    let b1 = -(1.0 + cos_w);
    let b2 = (1.0 + cos_w) / 2.0;
    let a0 = 1.0 + alpha;
    let a1 = -2.0 * cos_w;
    let a2 = 1.0 - alpha;
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    for v in buf.iter_mut() {
        let x = *v;
        let y = (b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2) / a0;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

fn rms_normalize(buf: &mut [f64], target_rms: f64) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let rms = math::sqrt(buf.iter().map(|x| x * x).sum::<f64>() / n as f64);
    if rms < 1e-12 {
        return;
    }
    let scale = target_rms / rms;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

fn white_noise(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

const FADE_MS: f64 = 5.0;

/// Raised-cosine window over a segment `[a_ms, b_ms)`. The rise is centered
/// on `a_ms` (the boundary convention: a boundary sits at the midpoint of
/// the incoming segment's cross-fade); the fall starts at `b_ms` and decays
/// over `fade_out_ms`, so a slow fall lets a segment linger into the next
/// one the way residual voicing lingers into aspiration.
fn segment_envelope(t_ms: f64, a_ms: f64, b_ms: f64, fade_out_ms: f64) -> f64 {
    let rise = ((t_ms - (a_ms - FADE_MS / 2.0)) / FADE_MS).clamp(0.0, 1.0);
    let fall = (((b_ms + fade_out_ms) - t_ms) / fade_out_ms).clamp(0.0, 1.0);
    let shape = |x: f64| 0.5 - 0.5 * math::cos(core::f64::consts::PI * x);
    shape(rise) * shape(fall)
}

/// Synthesize one token with the given per-speaker profile and a dedicated
/// RNG stream.
pub fn generate_token(
    rng: &mut ChaCha8Rng,
    params: &GenParams,
    profile: &SpeakerProfile,
    word: &str,
) -> SynthToken {
    let sr = params.sample_rate as f64;
    let spms = sr / 1000.0;

    let vowel_ms = math::round(rng.gen_range(params.vowel_ms.0..params.vowel_ms.1));
    let preasp_ms = math::round(sample_truncnorm(
        rng,
        profile.dur_loc_ms,
        params.preasp_std_ms,
        params.preasp_range_ms.0,
        params.preasp_range_ms.1,
    ));
    let closure_ms = math::round(rng.gen_range(params.closure_ms.0..params.closure_ms.1));
    let has_burst = rng.gen_bool(params.burst_prob);
    let burst_ms = if has_burst { 8.0 } else { 0.0 };
    let total_ms = vowel_ms + preasp_ms + closure_ms + burst_ms;
    let n = (total_ms * spms) as usize;

    let amp = rng.gen_range(params.amp_range.0..params.amp_range.1);
    let f0 = profile.f0_hz * rng.gen_range(0.96..1.04);

    // vowel: sawtooth source through a low resonance
    let saw: Vec<f64> = (0..n)
        .map(|i| 2.0 * (f0 * i as f64 / sr) % 2.0 - 1.0)
        .collect();
    let mut vowel = resonator(&saw, 550.0, 120.0, sr);
    rms_normalize(&mut vowel, 0.20 * amp);

    // pre-aspiration: high-passed noise with a rising amplitude ramp
    let asp_rms = rng.gen_range(params.asp_level.0..params.asp_level.1);
    let mut asp = white_noise(rng, n);
    highpass(&mut asp, params.noise_hp_hz, sr);
    highpass(&mut asp, params.noise_hp_hz, sr);
    rms_normalize(&mut asp, asp_rms * amp);

    // closure: very low-level noise
    let mut closure = white_noise(rng, n);
    rms_normalize(&mut closure, 0.0006);

    // optional release burst
    let mut burst = white_noise(rng, n);
    rms_normalize(&mut burst, 0.15 * amp);

    // background noise floor at the drawn SNR below the vowel level
    let snr = rng.gen_range(params.snr_db.0..params.snr_db.1);
    let floor_rms = 0.20 * amp * math::pow(10.0, -snr / 20.0);
    let mut floor = white_noise(rng, n);
    rms_normalize(&mut floor, floor_rms);

    let t_s = vowel_ms;
    let t_e = vowel_ms + preasp_ms;
    let closure_end = t_e + closure_ms;
    let breathy = rng.gen_range(params.breathy_ms.0..params.breathy_ms.1);
    let offset_blur = rng.gen_range(params.offset_blur_ms.0..params.offset_blur_ms.1);

    let mut samples = vec![0.0; n];
    for (i, out) in samples.iter_mut().enumerate() {
        let t_ms = i as f64 / spms;
        // residual voicing lingers `breathy` ms into the aspiration
        let mut v = vowel[i] * segment_envelope(t_ms, 0.0, t_s, breathy);
        v += asp[i] * ramp(t_ms, t_s, t_e) * segment_envelope(t_ms, t_s, t_e, offset_blur);
        v += closure[i] * segment_envelope(t_ms, t_e, closure_end, FADE_MS);
        if has_burst {
            let dt = t_ms - closure_end;
            let decay = if dt >= 0.0 { math::exp(-dt / 3.0) } else { 1.0 };
            v += burst[i] * decay * segment_envelope(t_ms, closure_end, total_ms, FADE_MS);
        }
        v += floor[i];
        *out = v;
    }

    let waveform = Waveform::new(samples, params.sample_rate).expect("generated token is valid");
    let t_len = waveform.num_frames() as f64;
    SynthToken {
        waveform,
        onset_ms: t_s,
        offset_ms: t_e,
        speaker: profile.id.clone(),
        word: String::from(word),
        window_start_ms: (t_s - 50.0).max(0.0),
        window_end_ms: (t_e + 60.0).min(t_len - 1.0),
    }
}

/// Aspiration amplitude ramp from 50% to 100% across the segment.
fn ramp(t_ms: f64, a_ms: f64, b_ms: f64) -> f64 {
    let x = ((t_ms - a_ms) / (b_ms - a_ms)).clamp(0.0, 1.0);
    0.5 + 0.5 * x
}

/// Generate `n` tokens round-robin over the speakers. Token `i` draws from
/// RNG stream `i + 1` of the corpus seed (stream 0 is the speaker meta-draw).
pub fn generate_corpus(params: &GenParams, n: usize) -> Vec<SynthToken> {
    let profiles = speaker_profiles(params);
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64 + 1);
            let profile = &profiles[i % profiles.len()];
            let word = format!("w{:02}", i % 10);
            generate_token(&mut rng, params, profile, &word)
        })
        .collect()
}
