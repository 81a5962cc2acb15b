use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical unit carried alongside a sampled signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "V")]
    Volt,
    #[serde(rename = "N")]
    Newton,
    #[serde(rename = "m/s")]
    MeterPerSecond,
    #[serde(rename = "m/s^2")]
    MeterPerSecondSquared,
    /// Raw accelerometer output in multiples of standard gravity.
    #[serde(rename = "g")]
    Gravity,
    #[serde(rename = "mm")]
    Millimeter,
    #[serde(rename = "1")]
    Dimensionless,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Volt => "V",
            Unit::Newton => "N",
            Unit::MeterPerSecond => "m/s",
            Unit::MeterPerSecondSquared => "m/s^2",
            Unit::Gravity => "g",
            Unit::Millimeter => "mm",
            Unit::Dimensionless => "1",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "V" => Unit::Volt,
            "N" => Unit::Newton,
            "m/s" => Unit::MeterPerSecond,
            "m/s^2" => Unit::MeterPerSecondSquared,
            "g" => Unit::Gravity,
            "mm" => Unit::Millimeter,
            "1" => Unit::Dimensionless,
            other => return Err(Error::invalid(format!("unknown unit {other:?}"))),
        })
    }
}

/// A uniformly sampled, finite, real-valued signal.
///
/// Construction validates the sample rate and rejects NaN/Inf samples, so
/// every `Waveform` in circulation upholds those invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    rate: f64,
    unit: Unit,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, rate: f64, unit: Unit) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("waveform samples"));
        }
        Ok(Self {
            samples,
            rate,
            unit,
        })
    }

    pub fn zeros(len: usize, rate: f64, unit: Unit) -> Result<Self> {
        Self::new(vec![0.0; len], rate, unit)
    }

    /// Builds a waveform from a closure evaluated at each sample time.
    pub fn from_fn(len: usize, rate: f64, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..len).map(|n| f(n as f64 / rate)).collect();
        Self::new(samples, rate, unit)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    /// Replaces the samples, keeping rate and unit.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.rate, self.unit)
    }

    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.samples.len() || range.start >= range.end {
            return Err(Error::invalid(format!(
                "slice {range:?} outside 0..{}",
                self.samples.len()
            )));
        }
        Self::new(self.samples[range].to_vec(), self.rate, self.unit)
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|x| x * gain).collect())
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn peak_to_peak(&self) -> f64 {
        self.max() - self.min()
    }

    /// Checks that two signals can be combined sample by sample.
    pub fn ensure_compatible(&self, other: &Waveform) -> Result<()> {
        if self.len() != other.len() || self.rate != other.rate {
            return Err(Error::LengthMismatch(format!(
                "{} samples @ {} Hz vs {} samples @ {} Hz",
                self.len(),
                self.rate,
                other.len(),
                other.rate
            )));
        }
        Ok(())
    }
}

/// Relative RMS difference `rms(a - b) / rms(b)`.
pub fn relative_rms_error(actual: &[f64], expected: &[f64]) -> f64 {
    let num: f64 = actual
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = expected.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rate_and_nan() {
        assert!(Waveform::new(vec![1.0], 0.0, Unit::Volt).is_err());
        assert!(Waveform::new(vec![1.0], -5.0, Unit::Volt).is_err());
        assert!(Waveform::new(vec![f64::NAN], 10.0, Unit::Volt).is_err());
        assert!(Waveform::new(vec![f64::INFINITY], 10.0, Unit::Volt).is_err());
        assert!(matches!(
            Waveform::new(vec![], 10.0, Unit::Volt),
            Err(Error::EmptySignal)
        ));
    }

    #[test]
    fn unit_symbols_round_trip() {
        for unit in [
            Unit::Volt,
            Unit::Newton,
            Unit::MeterPerSecond,
            Unit::MeterPerSecondSquared,
            Unit::Gravity,
            Unit::Millimeter,
            Unit::Dimensionless,
        ] {
            assert_eq!(unit.symbol().parse::<Unit>().unwrap(), unit);
        }
        assert!("furlong".parse::<Unit>().is_err());
    }

    #[test]
    fn slice_bounds() {
        let w = Waveform::new(vec![0.0, 1.0, 2.0, 3.0], 4.0, Unit::Newton).unwrap();
        assert_eq!(w.slice(1..3).unwrap().samples(), &[1.0, 2.0]);
        assert!(w.slice(2..5).is_err());
        assert!(w.slice(2..2).is_err());
    }
}
