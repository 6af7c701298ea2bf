//! Shared data model: labeled speech intervals and their search windows.

use alloc::string::String;

use thiserror::Error;

use crate::acoustics::FeatureSequence;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("search window [{start}, {end}] is empty or inverted")]
    BadWindow { start: usize, end: usize },
    #[error("gold boundaries ({onset}, {offset}) invalid or outside window [{start}, {end}]")]
    GoldOutsideWindow {
        onset: usize,
        offset: usize,
        start: usize,
        end: usize,
    },
    #[error("window end {end} exceeds last frame {last}")]
    WindowPastEnd { end: usize, last: usize },
}

/// Inclusive frame range that both the onset and the offset must fall into.
///
/// Frames are 1 ms apart, so frame indices double as millisecond offsets
/// from the start of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchWindow {
    pub start: usize,
    pub end: usize,
}

impl SearchWindow {
    pub fn new(start: usize, end: usize) -> Result<Self, DataError> {
        if start >= end {
            return Err(DataError::BadWindow { start, end });
        }
        Ok(SearchWindow { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        t >= self.start && t <= self.end
    }
}

/// One labeled speech interval: features, gold boundaries (frames), the
/// search window constraining candidates, and speaker/word metadata.
#[derive(Debug, Clone)]
pub struct Example {
    pub features: FeatureSequence,
    pub onset: usize,
    pub offset: usize,
    pub window: SearchWindow,
    pub speaker: String,
    pub word: String,
}

impl Example {
    pub fn new(
        features: FeatureSequence,
        onset: usize,
        offset: usize,
        window: SearchWindow,
        speaker: String,
        word: String,
    ) -> Result<Self, DataError> {
        if window.end >= features.len() {
            return Err(DataError::WindowPastEnd {
                end: window.end,
                last: features.len().saturating_sub(1),
            });
        }
        if onset >= offset || !window.contains(onset) || !window.contains(offset) {
            return Err(DataError::GoldOutsideWindow {
                onset,
                offset,
                start: window.start,
                end: window.end,
            });
        }
        Ok(Example {
            features,
            onset,
            offset,
            window,
            speaker,
            word,
        })
    }

    /// Gold pre-aspiration duration in milliseconds.
    pub fn gold_duration_ms(&self) -> f64 {
        (self.offset - self.onset) as f64
    }
}

/// Training search window derived from gold labels: 50 ms before the onset
/// to 60 ms after the offset, clamped to the frame range.
pub fn training_window(onset: usize, offset: usize, t_len: usize) -> SearchWindow {
    let start = onset.saturating_sub(50);
    let end = (offset + 60).min(t_len.saturating_sub(1));
    SearchWindow { start, end }
}
