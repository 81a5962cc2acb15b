use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::TrialRecord;
use crate::preprocess::{
    align_accelerometer, assign_directions, detect_sweeps, estimate_speed, reduce_lateral_to_1d,
    SweepSegment,
};
use crate::signal::{am_demodulate_sideband, fft_coefficient, integrate_to_velocity, Waveform};

/// Smallest usable message coefficient, relative to the voltage window's
/// full-scale message amplitude.
pub const MIN_MESSAGE_FRACTION: f64 = 1e-9;

/// Experimental condition a point was measured under.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub speed_mm_s: f64,
    pub force_n: f64,
    pub participant: u32,
}

/// Aligned 4000-sample slices of one sweep.
#[derive(Clone, Debug)]
pub struct SweepWindow {
    pub voltage: Waveform,
    pub friction_1d: Waveform,
    /// Lateral fingertip velocity, m/s.
    pub velocity: Waveform,
    /// 1-based position of the sweep among those detected in the trial.
    pub sweep: usize,
    /// First sample of the window in the trial record.
    pub offset: usize,
    pub condition: Condition,
}

/// One complex response sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrfPoint {
    pub freq_hz: f64,
    pub response: Complex64,
    pub sweep: usize,
    pub condition: Condition,
}

/// A collection of response samples, kept in a canonical order so merges
/// from parallel workers are order-independent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrfPointSet {
    pub entries: Vec<FrfPoint>,
}

impl FrfPointSet {
    pub fn new(mut entries: Vec<FrfPoint>) -> Self {
        sort_points(&mut entries);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn merge(mut self, other: FrfPointSet) -> Self {
        self.entries.extend(other.entries);
        sort_points(&mut self.entries);
        self
    }

    /// Distinct conditions, sorted.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut out: Vec<Condition> = Vec::new();
        for p in &self.entries {
            if !out.contains(&p.condition) {
                out.push(p.condition);
            }
        }
        out.sort_by(condition_order);
        out
    }

    /// Points measured under `condition`, in canonical order.
    pub fn for_condition(&self, condition: &Condition) -> Vec<FrfPoint> {
        self.entries
            .iter()
            .filter(|p| p.condition == *condition)
            .copied()
            .collect()
    }

    /// Mean complex response per frequency, for a single condition's points.
    pub fn averaged(points: &[FrfPoint]) -> Vec<(f64, Complex64)> {
        let mut out: Vec<(f64, Complex64, usize)> = Vec::new();
        for p in points {
            match out.iter_mut().find(|(f, _, _)| *f == p.freq_hz) {
                Some(slot) => {
                    slot.1 += p.response;
                    slot.2 += 1;
                }
                None => out.push((p.freq_hz, p.response, 1)),
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.into_iter().map(|(f, s, n)| (f, s / n as f64)).collect()
    }
}

fn condition_order(a: &Condition, b: &Condition) -> std::cmp::Ordering {
    a.participant
        .cmp(&b.participant)
        .then(a.speed_mm_s.total_cmp(&b.speed_mm_s))
        .then(a.force_n.total_cmp(&b.force_n))
}

fn sort_points(v: &mut [FrfPoint]) {
    v.sort_by(|a, b| {
        condition_order(&a.condition, &b.condition)
            .then(a.freq_hz.total_cmp(&b.freq_hz))
            .then(a.sweep.cmp(&b.sweep))
            .then(a.response.re.total_cmp(&b.response.re))
            .then(a.response.im.total_cmp(&b.response.im))
    });
}

/// Slices every in-bounds, left-to-right sweep out of `trial`. Out-of-bounds
/// sweeps are skipped with a warning; ordinals still count them.
pub fn extract_windows(trial: &TrialRecord, sweeps: &[SweepSegment]) -> Result<Vec<SweepWindow>> {
    trial.validate()?;
    let len = trial.voltage.len();
    let (ax, _, _) = align_accelerometer(&trial.accel_x, &trial.accel_y, &trial.accel_z)?;
    let proto = &trial.meta.protocol;
    let condition = Condition {
        speed_mm_s: proto.speed_mm_s,
        force_n: proto.normal_force_n,
        participant: trial.meta.participant,
    };
    let mut out = Vec::new();
    for (i, seg) in sweeps.iter().enumerate() {
        let Some(range) = seg.window(len) else {
            log::warn!(
                "sweep {} (middle sample {}) does not fit a full window; skipped",
                i + 1,
                seg.middle_index
            );
            continue;
        };
        if !seg.left_to_right {
            continue;
        }
        let fx = trial.force_x.slice(range.clone())?;
        let fy = trial.force_y.slice(range.clone())?;
        out.push(SweepWindow {
            voltage: trial.voltage.slice(range.clone())?,
            friction_1d: reduce_lateral_to_1d(&fx, &fy)?,
            velocity: integrate_to_velocity(&ax.slice(range.clone())?)?,
            sweep: i + 1,
            offset: range.start,
            condition,
        });
    }
    Ok(out)
}

/// Complex message phasor recovered from the window's AM voltage, and the
/// full-scale amplitude used for the blow-up guard.
fn message_phasor(window: &SweepWindow, message_freq: f64, carrier: f64) -> Result<Complex64> {
    let est = am_demodulate_sideband(&window.voltage, carrier, message_freq)?;
    let peak = window.voltage.max().abs().max(window.voltage.min().abs());
    let full_scale = peak * peak / 2.0;
    if !(est.amplitude > MIN_MESSAGE_FRACTION * full_scale) {
        return Err(Error::DivisionBlowUp { freq: message_freq });
    }
    Ok(est.phasor())
}

/// Friction response `F(f_m)/V_m(f_m)` of one sweep, N/V.
pub fn frf_point(window: &SweepWindow, message_freq: f64, carrier: f64) -> Result<FrfPoint> {
    let vm = message_phasor(window, message_freq, carrier)?;
    let f = fft_coefficient(&window.friction_1d, message_freq)?;
    point(window, message_freq, f / vm)
}

/// Skin mobility `v(f)/F(f)` of one sweep, (m/s)/N, measured against the
/// recorded friction.
pub fn skin_point(window: &SweepWindow, message_freq: f64) -> Result<FrfPoint> {
    let f = fft_coefficient(&window.friction_1d, message_freq)?;
    if f.norm() == 0.0 {
        return Err(Error::DivisionBlowUp { freq: message_freq });
    }
    let v = fft_coefficient(&window.velocity, message_freq)?;
    point(window, message_freq, v / f)
}

fn point(window: &SweepWindow, freq_hz: f64, response: Complex64) -> Result<FrfPoint> {
    if !(response.re.is_finite() && response.im.is_finite()) {
        return Err(Error::NonFinite("frequency response point"));
    }
    Ok(FrfPoint {
        freq_hz,
        response,
        sweep: window.sweep,
        condition: window.condition,
    })
}

/// Everything extracted from one trial.
#[derive(Clone, Debug)]
pub struct TrialAnalysis {
    pub sweeps: Vec<SweepSegment>,
    pub friction: Vec<FrfPoint>,
    pub skin: Vec<FrfPoint>,
    /// Speed from the position channel, mm/s, when it has enough samples.
    pub speed_estimate: Option<f64>,
}

/// Detects sweeps, extracts windows and evaluates friction and skin points
/// at the trial's message frequency.
pub fn analyze_trial(trial: &TrialRecord) -> Result<TrialAnalysis> {
    let friction = reduce_lateral_to_1d(&trial.force_x, &trial.force_y)?;
    let mut sweeps = detect_sweeps(&friction);
    assign_directions(&mut sweeps, &trial.position, friction.rate());
    let windows = extract_windows(trial, &sweeps)?;
    let proto = &trial.meta.protocol;
    let mut friction_points = Vec::with_capacity(windows.len());
    let mut skin_points = Vec::with_capacity(windows.len());
    for w in &windows {
        friction_points.push(frf_point(w, proto.message_freq, proto.carrier_hz)?);
        skin_points.push(skin_point(w, proto.message_freq)?);
    }
    Ok(TrialAnalysis {
        sweeps,
        friction: friction_points,
        skin: skin_points,
        speed_estimate: estimate_speed(&trial.position).ok(),
    })
}
