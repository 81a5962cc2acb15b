use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::FirstOrderFrictionModel;

/// Operating range over which the speed law was identified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Validity {
    pub speed_mm_s: [f64; 2],
    pub force_n: [f64; 2],
    pub amplitude_vpp: f64,
}

impl Default for Validity {
    fn default() -> Self {
        Self {
            speed_mm_s: [20.0, 100.0],
            force_n: [0.2, 0.6],
            amplitude_vpp: 150.0,
        }
    }
}

/// Speed-dependent first-order friction law: gain `k_bar` and a cutoff
/// that grows linearly with sliding speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalSpeedModel {
    /// N/V
    #[serde(rename = "K_bar", alias = "k_bar")]
    pub k_bar: f64,
    pub intercept_hz: f64,
    pub slope_hz_per_mm_s: f64,
    #[serde(default)]
    pub validity: Validity,
}

impl EmpiricalSpeedModel {
    /// The published law: 0.0123 N/V, 385.68 Hz + 13.811 Hz per mm/s.
    pub fn published() -> Self {
        Self {
            k_bar: 0.0123,
            intercept_hz: 385.68,
            slope_hz_per_mm_s: 13.811,
            validity: Validity::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_bar.is_finite() && self.k_bar > 0.0) {
            return Err(Error::invalid(format!(
                "k_bar must be positive, got {}",
                self.k_bar
            )));
        }
        if !(self.intercept_hz.is_finite() && self.intercept_hz > 0.0) {
            return Err(Error::invalid(format!(
                "intercept must be positive, got {}",
                self.intercept_hz
            )));
        }
        if !self.slope_hz_per_mm_s.is_finite() {
            return Err(Error::NonFinite("empirical slope"));
        }
        Ok(())
    }

    /// True when `speed` lies outside the identified range.
    pub fn is_extrapolation(&self, speed: f64) -> bool {
        let [lo, hi] = self.validity.speed_mm_s;
        !(lo..=hi).contains(&speed)
    }

    /// Cutoff in Hz at `speed` mm/s, with no range check.
    pub fn cutoff_hz(&self, speed: f64) -> f64 {
        self.intercept_hz + self.slope_hz_per_mm_s * speed
    }

    /// The first-order model in effect at `speed`.
    pub fn friction_model(&self, speed: f64) -> Result<FirstOrderFrictionModel> {
        FirstOrderFrictionModel::new(self.k_bar, TAU * self.cutoff_hz(speed))
    }

    /// `K̄·ω_o(ν)/(j2πf + ω_o(ν))`.
    pub fn response(&self, freq: f64, speed: f64) -> Complex64 {
        let wo = TAU * self.cutoff_hz(speed);
        self.k_bar * wo / Complex64::new(wo, TAU * freq)
    }
}

impl Default for EmpiricalSpeedModel {
    fn default() -> Self {
        Self::published()
    }
}

/// Evaluates the speed law at `freq` Hz, logging a warning when `speed`
/// is outside the validity range.
pub fn evaluate_model(model: &EmpiricalSpeedModel, freq: f64, speed: f64) -> Complex64 {
    if model.is_extrapolation(speed) {
        log::warn!("speed {speed} mm/s is outside the model's validity range; extrapolating");
    }
    model.response(freq, speed)
}
