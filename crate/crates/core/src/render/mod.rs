//! Speed-adaptive compensation: pre-distorting the message so that the
//! friction the finger feels follows a target waveform.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::empirical::EmpiricalSpeedModel;
use crate::error::{Error, Result};
use crate::plant::{
    record_channels, run_chain, Excitation, PlantConfig, PlantMode, SweepSchedule, AMPLIFIER_GAIN,
};
use crate::preprocess::reduce_lateral_to_1d;
use crate::signal::{
    am_demodulate_square, am_modulate_blocks, irfft, rfft, Spectrum, Unit, Waveform,
    DEFAULT_CARRIER, WINDOW_LEN,
};

/// Contact load used while verifying a render, N.
pub const VERIFY_NORMAL_FORCE_N: f64 = 0.4;
/// Low-pass used to recover the message from a rendered drive, Hz. It sits
/// between the 1 kHz message band and the 6 kHz alias of the doubled
/// carrier.
pub const DRIVE_DEMOD_CUTOFF_HZ: f64 = 3000.0;
/// Bands whose target energy is this far below the strongest band are left
/// out of the error report.
const BAND_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub carrier_hz: f64,
    /// Peak-to-peak limit of the screen drive, V.
    pub v_limit_vpp: f64,
    /// Largest boost the inverse filter may apply relative to DC, dB.
    pub ceiling_db: f64,
    pub block_len: usize,
    pub band_hz: [f64; 2],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            carrier_hz: DEFAULT_CARRIER,
            v_limit_vpp: 150.0,
            ceiling_db: 20.0,
            block_len: WINDOW_LEN,
            band_hz: [30.0, 1000.0],
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ceiling_db > 0.0 && self.v_limit_vpp > 0.0) || self.block_len < 2 {
            return Err(Error::invalid(
                "render config needs a positive ceiling, a positive voltage limit and blocks of 2+ samples",
            ));
        }
        let [lo, hi] = self.band_hz;
        if !(lo > 0.0 && hi > lo && hi <= 1000.0) {
            return Err(Error::invalid(format!(
                "render band [{lo}, {hi}] Hz must lie within (0, 1000] Hz"
            )));
        }
        Ok(())
    }

    fn ceiling(&self) -> f64 {
        10f64.powf(self.ceiling_db / 20.0)
    }
}

/// Magnitude of the boost `(jω + ω_o)/ω_o` that undoes the friction
/// low-pass at `freq` for speed `speed`.
pub fn required_boost(model: &EmpiricalSpeedModel, freq: f64, speed: f64) -> f64 {
    let wo = TAU * model.cutoff_hz(speed);
    Complex64::new(wo, TAU * freq).norm() / wo
}

/// Error at `freq` (dB) when compensation designed for `design_speed` is
/// felt at `run_speed`: the ratio of the two friction magnitudes.
pub fn mismatch_error_db(
    model: &EmpiricalSpeedModel,
    freq: f64,
    design_speed: f64,
    run_speed: f64,
) -> f64 {
    20.0 * (required_boost(model, freq, design_speed) / required_boost(model, freq, run_speed))
        .log10()
}

#[derive(Clone, Debug)]
pub struct InverseFiltered {
    /// Message voltage (monitor level), V.
    pub message: Waveform,
    /// Number of spectral bins whose boost was held at the ceiling.
    pub ceiling_engaged: usize,
    pub extrapolated: bool,
}

/// Message voltage whose friction response at `speed` reproduces
/// `target_friction`, block by block.
///
/// Each block is treated as one period: its spectrum is multiplied by the
/// inverse of the friction law with the boost magnitude capped at the
/// ceiling. The DC bin is dropped since the static friction level comes
/// from the contact load rather than the message.
pub fn inverse_filter(
    target_friction: &Waveform,
    speed: f64,
    model: &EmpiricalSpeedModel,
    cfg: &RenderConfig,
) -> Result<InverseFiltered> {
    cfg.validate()?;
    model.validate()?;
    let extrapolated = model.is_extrapolation(speed);
    if extrapolated {
        log::warn!("speed {speed} mm/s is outside the model's validity range");
    }
    let rate = target_friction.rate();
    let wo = TAU * model.cutoff_hz(speed);
    let ceiling = cfg.ceiling();
    let mut out = Vec::with_capacity(target_friction.len());
    let mut engaged = 0;
    let mut dropped_dc = false;
    for block in target_friction.samples().chunks(cfg.block_len) {
        let w = Waveform::new(block.to_vec(), rate, Unit::Newton)?;
        let mut spec = Spectrum::of(&w);
        let width = spec.bin_width();
        dropped_dc |= spec.bins()[0].norm() > 1e-12 * block.len() as f64;
        for (k, bin) in spec.bins_mut().iter_mut().enumerate() {
            if k == 0 {
                *bin = Complex64::new(0.0, 0.0);
                continue;
            }
            let mut boost = Complex64::new(wo, TAU * k as f64 * width) / wo;
            if boost.norm() > ceiling {
                boost *= ceiling / boost.norm();
                engaged += 1;
            }
            *bin *= boost / model.k_bar;
        }
        out.extend(spec.to_samples());
    }
    if dropped_dc {
        log::info!("target has a static component; it is left to the contact load");
    }
    if engaged > 0 {
        log::warn!("inverse-filter ceiling engaged on {engaged} bins");
    }
    Ok(InverseFiltered {
        message: Waveform::new(out, rate, Unit::Volt)?,
        ceiling_engaged: engaged,
        extrapolated,
    })
}

#[derive(Clone, Debug)]
pub struct RenderedVoltage {
    /// Screen drive, V.
    pub voltage: Waveform,
    /// Fraction of samples held at the voltage limit.
    pub saturation_fraction: f64,
}

/// Screen drive for `message`: block-wise square-root AM through the
/// amplifier, limited to `±v_limit/2`.
pub fn render_voltage(message: &Waveform, cfg: &RenderConfig) -> Result<RenderedVoltage> {
    cfg.validate()?;
    let am = am_modulate_blocks(message, cfg.carrier_hz, cfg.block_len)?;
    let limit = cfg.v_limit_vpp / 2.0;
    let mut clipped = 0usize;
    let samples: Vec<f64> = am
        .samples()
        .iter()
        .map(|&v| {
            let v = AMPLIFIER_GAIN * v;
            if v.abs() > limit {
                clipped += 1;
                v.signum() * limit
            } else {
                v
            }
        })
        .collect();
    let fraction = if samples.is_empty() {
        0.0
    } else {
        clipped as f64 / samples.len() as f64
    };
    Ok(RenderedVoltage {
        voltage: Waveform::new(samples, message.rate(), Unit::Volt)?,
        saturation_fraction: fraction,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandError {
    pub center_hz: f64,
    pub lo_hz: f64,
    pub hi_hz: f64,
    /// Achieved over target band energy, dB.
    pub error_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMatchReport {
    pub bands: Vec<BandError>,
    /// Largest absolute band error, dB.
    pub worst_case_db: f64,
    pub band_hz: [f64; 2],
    pub saturation_fraction: f64,
    pub ceiling_engaged: usize,
}

/// Base-two third-octave bands centred on 1 kHz, clipped to `[lo, hi]`.
pub fn third_octave_bands(lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for k in -30..=15 {
        let c = 1000.0 * 2f64.powf(k as f64 / 3.0);
        let (a, b) = (c * 2f64.powf(-1.0 / 6.0), c * 2f64.powf(1.0 / 6.0));
        if b > lo && a < hi {
            out.push((c, a.max(lo), b.min(hi)));
        }
    }
    out
}

/// Compares two spectra over third-octave bands of `band`.
pub fn band_errors(achieved: &Spectrum, target: &Spectrum, band: [f64; 2]) -> Vec<BandError> {
    let energy = |s: &Spectrum, lo: f64, hi: f64| -> f64 {
        (1..s.bins().len())
            .filter(|&k| {
                let f = s.frequency(k);
                f >= lo && f < hi
            })
            .map(|k| s.bins()[k].norm_sqr())
            .sum()
    };
    let bands = third_octave_bands(band[0], band[1]);
    // the last band includes its upper edge
    let edge = |hi: f64| if hi >= band[1] { hi + 1e-9 } else { hi };
    let target_energy: Vec<f64> = bands
        .iter()
        .map(|&(_, a, b)| energy(target, a, edge(b)))
        .collect();
    let strongest = target_energy.iter().copied().fold(0.0, f64::max);
    bands
        .iter()
        .zip(&target_energy)
        .filter(|(_, &e)| strongest > 0.0 && e > BAND_FLOOR * strongest)
        .map(|(&(c, a, b), &e)| BandError {
            center_hz: c,
            lo_hz: a,
            hi_hz: b,
            error_db: 10.0 * (energy(achieved, a, edge(b)) / e).log10(),
        })
        .collect()
}

/// Band-limited interpolation of one period of a signal by an integer
/// factor.
fn periodic_upsample(x: &[f64], factor: usize) -> Vec<f64> {
    if factor == 1 {
        return x.to_vec();
    }
    let n = x.len();
    let bins = rfft(x);
    let m = n * factor;
    let mut wide = vec![Complex64::new(0.0, 0.0); m / 2 + 1];
    for (k, b) in bins.iter().enumerate() {
        // an even-length Nyquist bin is shared between ±N/2
        wide[k] = if 2 * k == n { *b * 0.5 } else { *b };
    }
    irfft(&wide, m)
        .into_iter()
        .map(|v| v * factor as f64)
        .collect()
}

/// Closed-loop check of a render: compensates `target` for
/// `design_speed` using `design`, renders the drive, runs it through
/// `plant` at `run_speed` under a constant contact load, removes the rig's
/// colouring and compares the friction spectrum to the target.
pub fn verify_render(
    target: &Waveform,
    design: &EmpiricalSpeedModel,
    design_speed: f64,
    plant: &PlantConfig,
    run_speed: f64,
    cfg: &RenderConfig,
) -> Result<SpectralMatchReport> {
    plant.validate()?;
    let inverse = inverse_filter(target, design_speed, design, cfg)?;
    let rendered = render_voltage(&inverse.message, cfg)?;
    let rate = target.rate();
    let len = target.len();

    // the message actually delivered, as seen through the (possibly clipped) drive
    let monitor = rendered.voltage.scaled(1.0 / AMPLIFIER_GAIN)?;
    let delivered = am_demodulate_square(&monitor, DRIVE_DEMOD_CUTOFF_HZ)?;
    // Both signals are periodic over the record, so band-limited
    // interpolation onto the simulator's fine grid is exact.
    let over = plant.oversample.max(1);
    let fine_rate = rate * over as f64;
    let lookup = |w: &Waveform| {
        let s = periodic_upsample(w.samples(), over);
        let n = s.len() as i64;
        move |t: f64| s[((t * fine_rate).round() as i64).rem_euclid(n) as usize]
    };
    let message = lookup(&delivered);
    let drive = lookup(&rendered.voltage);
    let chain = run_chain(
        plant,
        run_speed,
        VERIFY_NORMAL_FORCE_N,
        &SweepSchedule::continuous(),
        &Excitation {
            message: &message,
            drive: &drive,
        },
        rate,
        len,
        over,
    )?;
    if plant.mode == PlantMode::Physical {
        log::debug!("verifying against the physical (voltage-squaring) plant");
    }
    let [fx, fy, ..] = record_channels(plant, &chain, rate, 0)?;
    let friction = reduce_lateral_to_1d(&fx, &fy)?;
    let mut achieved = Spectrum::of(&friction);
    if let Some(setup) = &plant.setup {
        // divide by the rig exactly as the simulator discretized it; its
        // lightly damped mode makes the analytic response a poor stand-in
        let rig = setup.lateral.transmissibility_tf().discretize(fine_rate)?;
        let width = achieved.bin_width();
        for (k, bin) in achieved.bins_mut().iter_mut().enumerate().skip(1) {
            *bin /= rig.response(k as f64 * width);
        }
    }
    let bands = band_errors(&achieved, &Spectrum::of(target), cfg.band_hz);
    let worst = bands.iter().map(|b| b.error_db.abs()).fold(0.0, f64::max);
    Ok(SpectralMatchReport {
        bands,
        worst_case_db: worst,
        band_hz: cfg.band_hz,
        saturation_fraction: rendered.saturation_fraction,
        ceiling_engaged: inverse.ceiling_engaged,
    })
}
