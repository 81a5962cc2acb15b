use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{Spectrum, Unit, Waveform};

/// Zero-phase brick-wall low-pass: bins above `cutoff` are zeroed.
///
/// Exact for content that is periodic in the record.
pub fn spectral_lowpass(w: &Waveform, cutoff: f64) -> Result<Waveform> {
    let nyquist = w.rate() / 2.0;
    if !(cutoff > 0.0 && cutoff < nyquist) {
        return Err(Error::invalid(format!(
            "low-pass cutoff {cutoff} Hz must lie in (0, {nyquist})"
        )));
    }
    let mut spectrum = Spectrum::of(w);
    let width = spectrum.bin_width();
    for (k, bin) in spectrum.bins_mut().iter_mut().enumerate() {
        if k as f64 * width > cutoff {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    w.with_samples(spectrum.to_samples())
}

/// Frequency-domain integration: every nonzero bin is divided by `jω` and
/// the DC bin is dropped, so the result carries no drift.
pub fn integrate_to_velocity(accel: &Waveform) -> Result<Waveform> {
    let mut spectrum = Spectrum::of(accel);
    let n = accel.len();
    let width = spectrum.bin_width();
    for (k, bin) in spectrum.bins_mut().iter_mut().enumerate() {
        if k == 0 || 2 * k == n {
            // DC has no antiderivative; the Nyquist bin would turn imaginary
            *bin = Complex64::new(0.0, 0.0);
        } else {
            *bin /= Complex64::new(0.0, TAU * k as f64 * width);
        }
    }
    let unit = match accel.unit() {
        Unit::MeterPerSecondSquared => Unit::MeterPerSecond,
        other => other,
    };
    Waveform::new(spectrum.to_samples(), accel.rate(), unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{relative_rms_error, SAMPLE_RATE};
    use proptest::prelude::*;

    fn accel(f: impl Fn(f64) -> f64) -> Waveform {
        Waveform::from_fn(4000, SAMPLE_RATE, Unit::MeterPerSecondSquared, f).unwrap()
    }

    #[test]
    fn integrates_cosine_to_scaled_sine() {
        let a = accel(|t| (TAU * 100.0 * t).cos());
        let v = integrate_to_velocity(&a).unwrap();
        assert_eq!(v.unit(), Unit::MeterPerSecond);
        let expected: Vec<f64> = (0..4000)
            .map(|n| (TAU * 100.0 * n as f64 / SAMPLE_RATE).sin() / (TAU * 100.0))
            .collect();
        assert!(relative_rms_error(v.samples(), &expected) < 0.005);
    }

    #[test]
    fn zero_stays_zero() {
        let v = integrate_to_velocity(&accel(|_| 0.0)).unwrap();
        assert!(v.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn superposition_of_two_tones() {
        let a = accel(|t| (TAU * 30.0 * t).cos() + (TAU * 300.0 * t).cos());
        let v = integrate_to_velocity(&a).unwrap();
        let expected: Vec<f64> = (0..4000)
            .map(|n| {
                let t = n as f64 / SAMPLE_RATE;
                (TAU * 30.0 * t).sin() / (TAU * 30.0) + (TAU * 300.0 * t).sin() / (TAU * 300.0)
            })
            .collect();
        assert!(relative_rms_error(v.samples(), &expected) < 0.01);
    }

    #[test]
    fn lowpass_rejects_bad_cutoff() {
        let a = accel(|t| t);
        assert!(spectral_lowpass(&a, 0.0).is_err());
        assert!(spectral_lowpass(&a, 10_000.0).is_err());
    }

    proptest! {
        #[test]
        fn integrating_the_derivative_returns_zero_mean_signal(
            amps in proptest::collection::vec(-2.0f64..2.0, 3),
            phases in proptest::collection::vec(-3.0f64..3.0, 3),
            bins in proptest::collection::vec(1usize..400, 3),
            offset in -5.0f64..5.0,
        ) {
            // v(t) = offset + Σ A cos(ωt + φ), with the analytic derivative as input
            let comps: Vec<(f64, f64, f64)> = amps.iter().zip(&phases).zip(&bins)
                .map(|((&a, &p), &b)| (a, p, TAU * b as f64 * 5.0))
                .collect();
            let v = |t: f64| offset + comps.iter().map(|&(a, p, w)| a * (w * t + p).cos()).sum::<f64>();
            let dv = |t: f64| comps.iter().map(|&(a, p, w)| -a * w * (w * t + p).sin()).sum::<f64>();
            let rec = integrate_to_velocity(&accel(dv)).unwrap();
            let expected: Vec<f64> = (0..4000).map(|n| v(n as f64 / SAMPLE_RATE) - offset).collect();
            let energy: f64 = expected.iter().map(|x| x * x).sum();
            prop_assume!(energy > 1e-6);
            prop_assert!(relative_rms_error(rec.samples(), &expected) < 0.005);
        }
    }
}
