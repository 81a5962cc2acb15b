//! Square-root-envelope amplitude modulation and its two demodulators.
//!
//! The drive voltage is `sqrt(m(t) + |min m|)·cos(2π f_c t)`. Squaring it (as
//! the electrostatic attraction does) yields `(m + |min m|)(1 + cos 2ω_c t)/2`,
//! so after low-pass filtering the message reappears at its own frequency
//! instead of at twice it.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::LazyLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ops::spectral_lowpass;
use crate::signal::spectrum::{bin_index, dft_bin};
use crate::signal::{Unit, Waveform, SAMPLE_RATE, WINDOW_LEN};

/// Carriers below this are felt as the carrier itself rather than its envelope.
pub const MIN_IMPERCEPTIBLE_CARRIER: f64 = 7000.0;
/// Default carrier frequency, Hz.
pub const DEFAULT_CARRIER: f64 = 7000.0;

/// Magnitude and cosine-referenced phase of one sinusoid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidEstimate {
    pub frequency: f64,
    pub amplitude: f64,
    /// Radians in (−π, π].
    pub phase: f64,
}

impl SinusoidEstimate {
    pub fn phasor(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(TAU);
    if p > PI {
        p -= TAU;
    }
    p
}

fn check_carrier(carrier: f64, rate: f64) -> Result<()> {
    let nyquist = rate / 2.0;
    if !(carrier > 0.0 && carrier < nyquist) {
        return Err(Error::Aliasing {
            freq: carrier,
            nyquist,
        });
    }
    if carrier < MIN_IMPERCEPTIBLE_CARRIER {
        log::warn!(
            "carrier {carrier} Hz is below {MIN_IMPERCEPTIBLE_CARRIER} Hz; the carrier itself may be perceptible"
        );
    }
    Ok(())
}

fn modulate_into(out: &mut [f64], message: &[f64], offset: usize, carrier: f64, rate: f64) {
    let shift = message.iter().copied().fold(f64::INFINITY, f64::min).abs();
    for (i, (o, &m)) in out.iter_mut().zip(message).enumerate() {
        // m >= min(m) >= -|min(m)|, so the radicand cannot go negative
        let radicand = (m + shift).max(0.0);
        let n = (offset + i) as f64;
        *o = radicand.sqrt() * (TAU * carrier * n / rate).cos();
    }
}

/// Square-root-envelope AM of `message` onto a cosine carrier.
pub fn am_modulate(message: &Waveform, carrier: f64) -> Result<Waveform> {
    check_carrier(carrier, message.rate())?;
    let mut out = vec![0.0; message.len()];
    modulate_into(&mut out, message.samples(), 0, carrier, message.rate());
    Waveform::new(out, message.rate(), Unit::Volt)
}

/// Like [`am_modulate`] but the DC shift is taken from each block's own
/// minimum. The carrier phase runs continuously across blocks.
pub fn am_modulate_blocks(message: &Waveform, carrier: f64, block_len: usize) -> Result<Waveform> {
    check_carrier(carrier, message.rate())?;
    if block_len == 0 {
        return Err(Error::invalid("block length must be positive"));
    }
    let mut out = vec![0.0; message.len()];
    for (b, (chunk_out, chunk_in)) in out
        .chunks_mut(block_len)
        .zip(message.samples().chunks(block_len))
        .enumerate()
    {
        modulate_into(chunk_out, chunk_in, b * block_len, carrier, message.rate());
    }
    Waveform::new(out, message.rate(), Unit::Volt)
}

/// Two-sided Fourier coefficient `h` of the unit-message envelope
/// `sqrt(cos θ + 1) = √2·|cos(θ/2)|`.
pub fn envelope_harmonic(h: i64) -> f64 {
    let h = h.unsigned_abs() as f64;
    let sign = if (h as u64) % 2 == 1 { 1.0 } else { -1.0 };
    2.0 * SQRT_2 / PI * sign / (4.0 * h * h - 1.0)
}

/// Coefficient magnitude at `f_c + f_m` produced by modulating a unit
/// sinusoid, measured once by a round trip at 100 Hz.
pub fn sideband_calibration() -> f64 {
    static CAL: LazyLock<f64> = LazyLock::new(|| {
        let k_c = bin_index(DEFAULT_CARRIER, WINDOW_LEN, SAMPLE_RATE).expect("carrier bin");
        let k_m = bin_index(100.0, WINDOW_LEN, SAMPLE_RATE).expect("message bin");
        unit_model(WINDOW_LEN, k_m, k_c, 0.0, 0.0).1.norm()
    });
    *CAL
}

/// Carrier-bin and upper-sideband coefficients of a unit-message AM signal
/// on an `N`-sample window: message `cos(2π k_m n/N + φ_m)`, carrier
/// `cos(2π k_c n/N + φ_c)`.
///
/// Evaluated exactly, so it accounts for the sampled minimum (the DC shift),
/// clipping of the radicand and envelope harmonics that fold onto the bins.
fn unit_model(
    n: usize,
    k_m: usize,
    k_c: usize,
    phase_m: f64,
    phase_c: f64,
) -> (Complex64, Complex64) {
    let msg: Vec<f64> = (0..n)
        .map(|i| (TAU * ((i * k_m) % n) as f64 / n as f64 + phase_m).cos())
        .collect();
    let shift = msg.iter().copied().fold(f64::INFINITY, f64::min).abs();
    let out: Vec<f64> = msg
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            (m + shift).max(0.0).sqrt() * (TAU * ((i * k_c) % n) as f64 / n as f64 + phase_c).cos()
        })
        .collect();
    (dft_bin(&out, k_c), dft_bin(&out, k_c + k_m))
}

/// Reconstructs a single-tone message from the upper sideband coefficient at
/// `f_c + f_m`.
///
/// The carrier need not start at zero phase: its phase is read from the
/// carrier bin, which the envelope's DC term dominates. The coefficient is
/// divided by [`sideband_calibration`]. Because the envelope is
/// `√(A·(cos θ + 1))`, the coefficient grows with `√A` and the ratio is
/// squared to return the message amplitude. The remaining
/// frequency-dependent envelope-shape factor (harmonics folded onto the bins
/// near Nyquist, the sampled DC shift) is computed from the exact forward
/// model and solved jointly with both phases by a damped Newton iteration.
pub fn am_demodulate_sideband(
    modulated: &Waveform,
    carrier: f64,
    message_freq: f64,
) -> Result<SinusoidEstimate> {
    let n = modulated.len();
    let rate = modulated.rate();
    let upper = carrier + message_freq;
    if upper >= rate / 2.0 {
        return Err(Error::Aliasing {
            freq: upper,
            nyquist: rate / 2.0,
        });
    }
    let k_b = bin_index(upper, n, rate)?;
    let k_m = bin_index(message_freq, n, rate)?;
    let k_c = bin_index(carrier, n, rate)?;

    let coef = dft_bin(modulated.samples(), k_b);
    let carrier_coef = dft_bin(modulated.samples(), k_c);
    if coef.norm() == 0.0 || carrier_coef.norm() == 0.0 {
        return Ok(SinusoidEstimate {
            frequency: message_freq,
            amplitude: 0.0,
            phase: 0.0,
        });
    }
    let cal = sideband_calibration();
    let residual = |p: [f64; 2]| {
        let (c, b) = unit_model(n, k_m, k_c, p[0], p[1]);
        [
            wrap_phase(coef.arg() - b.arg()),
            wrap_phase(carrier_coef.arg() - c.arg()),
        ]
    };
    let phase_c0 = carrier_coef.arg();
    let phase_m0 = wrap_phase(coef.arg() - phase_c0);
    let mut best = ([phase_m0, phase_c0], f64::INFINITY);
    for start in 0..8 {
        let p0 = [wrap_phase(phase_m0 + start as f64 * TAU / 8.0), phase_c0];
        let (p, r) = solve_phases(&residual, p0);
        if r < best.1 {
            best = (p, r);
        }
        if r < 1e-12 {
            break;
        }
    }
    let [phase_m, phase_c] = best.0;
    let model = unit_model(n, k_m, k_c, phase_m, phase_c);
    let shape = model.1.norm() / cal;
    Ok(SinusoidEstimate {
        frequency: message_freq,
        amplitude: (coef.norm() / (cal * shape)).powi(2),
        phase: phase_m,
    })
}

/// Damped Newton iteration driving both phase residuals to zero, with a
/// central-difference Jacobian. Returns the final point and residual norm.
fn solve_phases(residual: &impl Fn([f64; 2]) -> [f64; 2], mut p: [f64; 2]) -> ([f64; 2], f64) {
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let mut r = residual(p);
    for _ in 0..50 {
        if norm(r) < 1e-13 {
            break;
        }
        let h = 1e-6;
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let (mut up, mut down) = (p, p);
            up[j] += h;
            down[j] -= h;
            let (ru, rd) = (residual(up), residual(down));
            for i in 0..2 {
                jac[i][j] = wrap_phase(ru[i] - rd[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-12 {
            break;
        }
        // the residual is (target − model), so the Newton step adds J⁻¹r
        let step = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
        ];
        let mut scale = 1.0;
        loop {
            let trial = [
                wrap_phase(p[0] - scale * step[0]),
                wrap_phase(p[1] - scale * step[1]),
            ];
            let rt = residual(trial);
            if norm(rt) < norm(r) || scale < 1e-4 {
                p = trial;
                r = rt;
                break;
            }
            scale *= 0.5;
        }
    }
    (p, norm(r))
}

/// `2·lowpass(v²)`: the shifted message `m + |min m|` recovered by squaring.
pub fn squared_envelope(modulated: &Waveform, lp_cutoff: f64) -> Result<Waveform> {
    let squared =
        modulated.with_samples(modulated.samples().iter().map(|v| 2.0 * v * v).collect())?;
    spectral_lowpass(&squared, lp_cutoff)
}

/// Squaring demodulator: exact inverse of [`am_modulate`] for messages inside
/// the pass band, returned with the DC shift (the mean) removed.
pub fn am_demodulate_square(modulated: &Waveform, lp_cutoff: f64) -> Result<Waveform> {
    let env = squared_envelope(modulated, lp_cutoff)?;
    let mean = env.mean();
    env.with_samples(env.samples().iter().map(|x| x - mean).collect())
}
