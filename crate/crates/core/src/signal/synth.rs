use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::signal::{Unit, Waveform};

/// Analysis window length in samples.
pub const WINDOW_LEN: usize = 4000;
/// Sampling rate of every recorded channel, Hz.
pub const SAMPLE_RATE: f64 = 20_000.0;
/// Frequency resolution of one analysis window, Hz.
pub const BIN_WIDTH: f64 = SAMPLE_RATE / WINDOW_LEN as f64;

/// Number of samples spanned by `duration` seconds at `rate`, if integral.
pub fn sample_count(duration: f64, rate: f64) -> Result<usize> {
    let exact = duration * rate;
    let n = exact.round();
    if !(n >= 1.0) || (exact - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::invalid(format!(
            "duration {duration} s is not a whole number of samples at {rate} Hz"
        )));
    }
    Ok(n as usize)
}

/// `amplitude·cos(2π·freq·n/rate + phase)` for `duration` seconds.
pub fn make_sine(
    freq: f64,
    amplitude: f64,
    phase: f64,
    duration: f64,
    rate: f64,
) -> Result<Waveform> {
    let nyquist = rate / 2.0;
    if !(freq < nyquist) || freq < 0.0 {
        return Err(Error::Aliasing { freq, nyquist });
    }
    let n = sample_count(duration, rate)?;
    let samples = (0..n)
        .map(|i| amplitude * (TAU * freq * i as f64 / rate + phase).cos())
        .collect();
    Waveform::new(samples, rate, Unit::Volt)
}

/// Geometric progression from `f_min` to `f_max`, endpoints included.
pub fn geometric_frequencies(f_min: f64, f_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_max > f_min) || n < 2 {
        return Err(Error::invalid(format!(
            "need 0 < f_min < f_max and n >= 2, got ({f_min}, {f_max}, {n})"
        )));
    }
    let ratio = (f_max / f_min).powf(1.0 / (n - 1) as f64);
    Ok((0..n)
        .map(|i| match i {
            0 => f_min,
            i if i == n - 1 => f_max,
            i => f_min * ratio.powi(i as i32),
        })
        .collect())
}

/// Log-spaced test frequencies snapped to the nearest analysis bin so every
/// tone is periodic in a [`WINDOW_LEN`]-sample window.
pub fn log_spaced_frequencies(f_min: f64, f_max: f64, n: usize) -> Result<Vec<f64>> {
    Ok(geometric_frequencies(f_min, f_max, n)?
        .into_iter()
        .map(|f| ((f / BIN_WIDTH).round().max(1.0)) * BIN_WIDTH)
        .collect())
}

/// The 15 message frequencies of the excitation protocol (30 Hz to 2 kHz).
pub fn protocol_frequencies() -> Vec<f64> {
    log_spaced_frequencies(30.0, 2000.0, 15).expect("static protocol range")
}
