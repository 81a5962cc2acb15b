use serde::{Deserialize, Serialize};

use crate::plant::PositionTrace;
use crate::signal::{Waveform, WINDOW_LEN};

/// Samples to the left of a window's middle sample.
pub const WINDOW_LEFT: usize = WINDOW_LEN / 2 - 1;
/// Samples to the right of a window's middle sample.
pub const WINDOW_RIGHT: usize = WINDOW_LEN / 2;
/// Smoothing span applied before the mean-threshold test, seconds.
pub const SMOOTHING_S: f64 = 0.05;

/// One detected sweep. Indices are inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSegment {
    pub start_index: usize,
    pub end_index: usize,
    pub middle_index: usize,
    pub left_to_right: bool,
}

impl SweepSegment {
    /// Sample range `[middle − 1999, middle + 2000]` as a half-open range, if
    /// it fits in `len` samples.
    pub fn window(&self, len: usize) -> Option<std::ops::Range<usize>> {
        let start = self.middle_index.checked_sub(WINDOW_LEFT)?;
        let end = self.middle_index + WINDOW_RIGHT + 1;
        (end <= len).then_some(start..end)
    }
}

/// Centred moving average of odd length `span`; the window shrinks at the
/// record ends.
pub fn moving_average(x: &[f64], span: usize) -> Vec<f64> {
    let half = span / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Finds stretches where the smoothed friction stays strictly above its
/// mean for at least one analysis window.
pub fn detect_sweeps(friction_1d: &Waveform) -> Vec<SweepSegment> {
    let x = friction_1d.samples();
    let mean = friction_1d.mean();
    // Smoothing the de-meaned signal keeps the running sums small, and the
    // tolerance stops rounding from lifting a flat signal above its mean.
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let threshold = 1e-12 * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let span = ((SMOOTHING_S * friction_1d.rate()).round() as usize) | 1;
    let smooth = moving_average(&centered, span);
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=smooth.len() {
        let above = i < smooth.len() && smooth[i] > threshold;
        match (above, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let end = i - 1;
                if end + 1 - s >= WINDOW_LEN {
                    out.push(SweepSegment {
                        start_index: s,
                        end_index: end,
                        middle_index: ((s + end) as f64 / 2.0).round() as usize,
                        left_to_right: true,
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Marks each sweep's direction from the finger position at its ends.
pub fn assign_directions(segments: &mut [SweepSegment], position: &PositionTrace, rate: f64) {
    if position.len() < 2 {
        return;
    }
    for seg in segments {
        let a = position.at(seg.start_index as f64 / rate);
        let b = position.at(seg.end_index as f64 / rate);
        if let (Some(a), Some(b)) = (a, b) {
            seg.left_to_right = b >= a;
        }
    }
}
