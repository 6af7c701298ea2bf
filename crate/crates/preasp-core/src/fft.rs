//! Minimal iterative radix-2 FFT.
//!
//! Power-of-two sizes only; the acoustic front-end zero-pads its analysis
//! windows to the next power of two. A hand-rolled kernel keeps the crate
//! `no_std`-compatible.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

pub(crate) struct Fft {
    size: usize,
    // twiddle[k] = e^{-2πik/size} for k < size/2
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
}

impl Fft {
    /// `size` must be a power of two (≥ 1).
    pub(crate) fn new(size: usize) -> Self {
        assert!(size.is_power_of_two(), "FFT size must be a power of two");
        let half = size / 2;
        let mut tw_re = Vec::with_capacity(half);
        let mut tw_im = Vec::with_capacity(half);
        for k in 0..half {
            let ang = -2.0 * core::f64::consts::PI * k as f64 / size as f64;
            tw_re.push(math::cos(ang));
            tw_im.push(math::sin(ang));
        }
        Fft { size, tw_re, tw_im }
    }

    /// In-place forward transform of `re + i*im` (both length `size`).
    pub(crate) fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.size;
        debug_assert_eq!(re.len(), n);
        debug_assert_eq!(im.len(), n);
        if n <= 1 {
            return;
        }

        // bit-reversal permutation
        let mut j = 0usize;
        for i in 0..n - 1 {
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
            let mut mask = n >> 1;
            while j & mask != 0 {
                j &= !mask;
                mask >>= 1;
            }
            j |= mask;
        }

        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let wr = self.tw_re[k * step];
                    let wi = self.tw_im[k * step];
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }

    /// One-sided power spectrum |X[k]|² for k = 0..=size/2 of a real frame.
    /// The frame is zero-padded (or truncated) to the transform size.
    pub(crate) fn power_spectrum(&self, frame: &[f64]) -> Vec<f64> {
        let n = self.size;
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        let m = frame.len().min(n);
        re[..m].copy_from_slice(&frame[..m]);
        self.forward(&mut re, &mut im);
        (0..=n / 2).map(|k| re[k] * re[k] + im[k] * im[k]).collect()
    }
}

pub(crate) fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_has_flat_spectrum() {
        let fft = Fft::new(16);
        let mut frame = vec![0.0; 16];
        frame[0] = 1.0;
        let p = fft.power_spectrum(&frame);
        assert_eq!(p.len(), 9);
        for v in p {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft() {
        let n = 32;
        let fft = Fft::new(n);
        let signal: Vec<f64> = (0..n).map(|i| math::sin(0.37 * i as f64) + 0.2).collect();
        let p = fft.power_spectrum(&signal);
        for k in 0..=n / 2 {
            let mut sr = 0.0;
            let mut si = 0.0;
            for (i, &x) in signal.iter().enumerate() {
                let ang = -2.0 * core::f64::consts::PI * (k * i) as f64 / n as f64;
                sr += x * math::cos(ang);
                si += x * math::sin(ang);
            }
            let want = sr * sr + si * si;
            assert!((p[k] - want).abs() < 1e-9 * want.max(1.0));
        }
    }
}
