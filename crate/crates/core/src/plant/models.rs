//! Parameter records for the friction, skin and measurement-setup transfer
//! functions.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{polymul, polyval, ContinuousTf};

/// First-order friction response `K·ω_o/(s + ω_o)` from message voltage to
/// friction force.
///
/// An infinite `omega_o` stands for a pure gain; it is written to JSON as
/// `null`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderFrictionModel {
    /// N/V.
    pub k: f64,
    /// Cutoff in rad/s.
    #[serde(with = "infinite_as_null")]
    pub omega_o: f64,
}

impl FirstOrderFrictionModel {
    pub fn new(k: f64, omega_o: f64) -> Result<Self> {
        let model = Self { k, omega_o };
        model.validate()?;
        Ok(model)
    }

    pub fn from_hz(k: f64, cutoff_hz: f64) -> Result<Self> {
        Self::new(k, TAU * cutoff_hz)
    }

    /// Pure gain with no cutoff.
    pub fn gain_only(k: f64) -> Result<Self> {
        Self::new(k, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::invalid(format!(
                "friction gain must be positive, got {}",
                self.k
            )));
        }
        if !(self.omega_o > 0.0) || self.omega_o.is_nan() {
            return Err(Error::invalid(format!(
                "friction cutoff must be positive, got {}",
                self.omega_o
            )));
        }
        Ok(())
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.omega_o / TAU
    }

    pub fn response(&self, freq: f64) -> Complex64 {
        if self.omega_o.is_infinite() {
            return Complex64::new(self.k, 0.0);
        }
        self.k * self.omega_o / Complex64::new(self.omega_o, TAU * freq)
    }

    pub fn transfer_function(&self) -> ContinuousTf {
        let tf = if self.omega_o.is_infinite() {
            ContinuousTf::from_polys(&[self.k], &[1.0])
        } else {
            ContinuousTf::from_polys(&[self.k * self.omega_o], &[1.0, self.omega_o])
        };
        tf.expect("validated first-order model")
    }
}

/// Mass-spring-damper skin model with velocity response `s/(m s² + b s + k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkinModel {
    /// kg
    pub m: f64,
    /// N·s/m
    pub b: f64,
    /// N/m
    pub k: f64,
}

impl SkinModel {
    pub fn new(m: f64, b: f64, k: f64) -> Result<Self> {
        let skin = Self { m, b, k };
        skin.validate()?;
        Ok(skin)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("b", self.b), ("k", self.k)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "skin parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn natural_frequency_hz(&self) -> f64 {
        (self.k / self.m).sqrt() / TAU
    }

    /// Velocity per unit friction force at `freq`.
    pub fn velocity_response(&self, freq: f64) -> Complex64 {
        let s = Complex64::new(0.0, TAU * freq);
        s / (self.m * s * s + self.b * s + self.k)
    }

    pub fn velocity_tf(&self) -> ContinuousTf {
        ContinuousTf::from_polys(&[1.0, 0.0], &[self.m, self.b, self.k]).expect("validated skin")
    }

    /// Acceleration per unit friction force, `s²/(m s² + b s + k)`.
    pub fn acceleration_tf(&self) -> ContinuousTf {
        ContinuousTf::from_polys(&[1.0, 0.0, 0.0], &[self.m, self.b, self.k])
            .expect("validated skin")
    }
}

impl Default for SkinModel {
    fn default() -> Self {
        Self {
            m: 0.0015,
            b: 1.3,
            k: 444.0,
        }
    }
}

/// Second-order normal-direction setup model
/// `s·K·ω_n²/(s² + 2ζω_n s + ω_n²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalSetup {
    pub k_snd: f64,
    /// rad/s
    pub omega_n: f64,
    pub zeta: f64,
}

impl NormalSetup {
    pub fn response(&self, freq: f64) -> Complex64 {
        let s = Complex64::new(0.0, TAU * freq);
        let wn2 = self.omega_n * self.omega_n;
        s * self.k_snd * wn2 / (s * s + 2.0 * self.zeta * self.omega_n * s + wn2)
    }

    pub fn resonance_hz(&self) -> f64 {
        self.omega_n / TAU
    }
}

impl Default for NormalSetup {
    fn default() -> Self {
        Self {
            k_snd: 0.58,
            omega_n: TAU * 1454.0,
            zeta: 0.011,
        }
    }
}

/// Fourth-order lateral setup model
/// `s·ω_n²/(s² + 2ζω_n s + ω_n²) · (b3 s² + b2 s + b1)/(a3 s² + a2 s + a1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateralSetup {
    /// rad/s
    pub omega_n: f64,
    pub zeta: f64,
    pub b3: f64,
    pub b2: f64,
    pub b1: f64,
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
}

impl LateralSetup {
    fn resonator(&self, s: Complex64) -> Complex64 {
        let wn2 = self.omega_n * self.omega_n;
        wn2 / (s * s + 2.0 * self.zeta * self.omega_n * s + wn2)
    }

    fn mounting(&self, s: Complex64) -> Complex64 {
        polyval(&[self.b3, self.b2, self.b1], s) / polyval(&[self.a3, self.a2, self.a1], s)
    }

    /// The model as written, velocity over force.
    pub fn response(&self, freq: f64) -> Complex64 {
        let s = Complex64::new(0.0, TAU * freq);
        s * self.resonator(s) * self.mounting(s)
    }

    /// Force transmissibility: the response without its differentiating
    /// zero, normalized to unit gain at DC. This is the factor by which the
    /// rig colours a lateral force on its way to the sensor.
    pub fn transmissibility(&self, freq: f64) -> Complex64 {
        let s = Complex64::new(0.0, TAU * freq);
        self.resonator(s) * self.mounting(s) * (self.a1 / self.b1)
    }

    pub fn transmissibility_tf(&self) -> ContinuousTf {
        let wn2 = self.omega_n * self.omega_n;
        let gain = wn2 * self.a1 / self.b1;
        let num = [self.b3 * gain, self.b2 * gain, self.b1 * gain];
        let res = [1.0, 2.0 * self.zeta * self.omega_n, wn2];
        let den = polymul(&res, &[self.a3, self.a2, self.a1]);
        ContinuousTf::from_polys(&num, &den).expect("validated lateral setup")
    }

    /// Frequencies (Hz) of the local magnitude maxima of [`Self::response`]
    /// between `lo` and `hi`, located on a fine grid and refined by golden
    /// section search.
    pub fn resonance_peaks_hz(&self, lo: f64, hi: f64) -> Vec<f64> {
        local_maxima(|f| self.response(f).norm(), lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.omega_n,
            self.zeta,
            self.b3,
            self.b2,
            self.b1,
            self.a3,
            self.a2,
            self.a1,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lateral setup"));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) || !(self.omega_n > 0.0) {
            return Err(Error::invalid(
                "lateral setup needs omega_n > 0 and 0 < zeta < 1",
            ));
        }
        // a3 s² + a2 s + a1 is Hurwitz iff all coefficients share a sign
        let a = [self.a3, self.a2, self.a1];
        if !(a.iter().all(|&c| c > 0.0) || a.iter().all(|&c| c < 0.0)) {
            return Err(Error::invalid("lateral setup denominator is not stable"));
        }
        if self.b1 == 0.0 {
            return Err(Error::invalid("lateral setup b1 must be nonzero"));
        }
        Ok(())
    }
}

impl Default for LateralSetup {
    fn default() -> Self {
        Self {
            omega_n: TAU * 1714.0,
            zeta: 0.06,
            b3: 1.0,
            b2: 92.0,
            b1: (TAU * 922.0).powi(2),
            a3: 1.0,
            a2: 0.0001,
            a1: (TAU * 856.0).powi(2),
        }
    }
}

/// Measurement-rig dynamics in both directions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupModel {
    pub normal: NormalSetup,
    pub lateral: LateralSetup,
}

impl SetupModel {
    pub fn validate(&self) -> Result<()> {
        let n = &self.normal;
        if !(n.zeta > 0.0 && n.zeta < 1.0) || !(n.omega_n > 0.0) || !n.k_snd.is_finite() {
            return Err(Error::invalid(
                "normal setup needs omega_n > 0 and 0 < zeta < 1",
            ));
        }
        self.lateral.validate()
    }
}

/// Local maxima of `g` on `[lo, hi]`, refined to about 1e-9 relative.
fn local_maxima(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let steps = 20_000;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / steps as f64))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&f| g(f)).collect();
    let mut peaks = Vec::new();
    for i in 1..steps {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..100 {
                let c = b - ratio * (b - a);
                let d = a + ratio * (b - a);
                if g(c) > g(d) {
                    b = d;
                } else {
                    a = c;
                }
                if b - a < 1e-10 * b {
                    break;
                }
            }
            peaks.push(0.5 * (a + b));
        }
    }
    peaks
}

/// Serializes an infinite value as JSON `null` and reads `null` back as +∞.
mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_lateral_peaks_near_reported_resonances() {
        let peaks = LateralSetup::default().resonance_peaks_hz(100.0, 3000.0);
        assert_eq!(peaks.len(), 2, "{peaks:?}");
        assert!((peaks[0] / 866.0 - 1.0).abs() < 0.02, "{peaks:?}");
        assert!((peaks[1] / 1740.0 - 1.0).abs() < 0.02, "{peaks:?}");
    }

    #[test]
    fn lateral_response_matches_expanded_polynomials() {
        let l = LateralSetup::default();
        let s = Complex64::new(0.0, TAU * 100.0);
        let wn2 = l.omega_n * l.omega_n;
        // numerator s·ωn²·(s² + 92 s + b1), denominator expanded by hand
        let num = s * wn2 * (s * s + 92.0 * s + l.b1);
        let d1 = s * s + 2.0 * l.zeta * l.omega_n * s + wn2;
        let d2 = s * s + 1e-4 * s + l.a1;
        let direct = num / (d1 * d2);
        assert_relative_eq!(
            (l.response(100.0) - direct).norm() / direct.norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn lateral_response_vanishes_at_dc() {
        let l = LateralSetup::default();
        assert_eq!(l.response(0.0).norm(), 0.0);
        // the differentiating zero makes the low-frequency gain linear in f
        assert_relative_eq!(
            l.response(2e-6).norm(),
            2.0 * l.response(1e-6).norm(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn transmissibility_has_unit_dc_gain_and_matches_tf() {
        let l = LateralSetup::default();
        assert_relative_eq!(l.transmissibility(1e-9).re, 1.0, max_relative = 1e-9);
        let tf = l.transmissibility_tf();
        for f in [30.0, 500.0, 900.0, 2000.0] {
            let a = tf.response(f);
            let b = l.transmissibility(f);
            assert_relative_eq!((a - b).norm() / b.norm(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn skin_resonance_from_reference_values() {
        let skin = SkinModel::default();
        assert_relative_eq!(skin.natural_frequency_hz(), 86.58, max_relative = 1e-3);
        let at_res = skin.velocity_response(skin.natural_frequency_hz());
        assert_relative_eq!(at_res.norm(), 1.0 / 1.3, max_relative = 1e-12);
    }

    #[test]
    fn first_order_corner_and_json_null() {
        let m = FirstOrderFrictionModel::from_hz(0.0147, 961.0).unwrap();
        assert_relative_eq!(
            m.response(961.0).norm(),
            0.0147 / 2f64.sqrt(),
            max_relative = 1e-12
        );
        let g = FirstOrderFrictionModel::gain_only(1.0).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"k":1.0,"omega_o":null}"#);
        let back: FirstOrderFrictionModel = serde_json::from_str(&json).unwrap();
        assert!(back.omega_o.is_infinite());
        assert!(FirstOrderFrictionModel::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn unstable_lateral_denominator_is_rejected() {
        let mut l = LateralSetup::default();
        assert!(l.validate().is_ok());
        l.a2 = -1.0;
        assert!(l.validate().is_err());
    }
}
