//! Measurement of pre-aspiration onset/offset times in speech intervals.
//!
//! Pre-aspiration is the stretch of glottal friction between a sonorant and a
//! voiceless obstruent, before the consonant's release. Given a speech
//! interval containing exactly one such event, the goal is to predict the
//! onset time `t_s` and offset time `t_e` of the pre-aspiration.
//!
//! The crate provides two predictors over a shared acoustic front-end, plus
//! the evaluation harness and a synthetic-data generator used to verify the
//! whole pipeline end to end:
//!
//! - [`acoustics`]: 8-dimensional per-millisecond feature sequences
//!   (spectral energies, Wiener entropy, pitch, voicing, zero crossings).
//! - [`frame_model`]: a 40-40-1 feedforward classifier over per-frame context
//!   windows, with moving-average smoothing and longest-run decoding.
//! - [`structured`]: a segment-level linear predictor over interval feature
//!   maps, trained with Passive-Aggressive updates and loss-augmented
//!   inference.
//! - [`evaluation`]: tolerance tables, boundary MAE, duration statistics,
//!   Pearson correlation, k-fold and leave-one-speaker-out splits.
//! - [`synthdata`]: seeded vowel/aspiration/closure token generator with
//!   exactly known boundaries.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all IO lives in the
//! companion CLI crate. Every routine is deterministic given its inputs and
//! seeds, so results are reproducible bit for bit.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod acoustics;
pub mod data;
pub mod evaluation;
pub mod frame_model;
pub mod structured;
pub mod synthdata;

mod fft;
mod math;
