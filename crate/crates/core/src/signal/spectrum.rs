//! FFT helpers built on `rustfft`.
//!
//! Coefficients returned by [`fft_coefficient`] and [`Spectrum::coefficient`]
//! are one-sided and amplitude-normalized: a bin-centered `A·cos(2πft + φ)`
//! reads back as `A·e^{jφ}`.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Tolerance (relative, in bins) for treating a frequency as bin-centered.
pub const BIN_TOLERANCE: f64 = 1e-6;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Unnormalized one-sided DFT, `N/2 + 1` bins.
pub fn rfft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_plan(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf
}

/// Inverse of [`rfft`] for a signal of length `n`.
///
/// The imaginary parts of the DC and (for even `n`) Nyquist bins are ignored.
pub fn irfft(bins: &[Complex64], n: usize) -> Vec<f64> {
    assert_eq!(bins.len(), n / 2 + 1, "bin count does not match length");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[0] = Complex64::new(bins[0].re, 0.0);
    for k in 1..bins.len() {
        if 2 * k == n {
            buf[k] = Complex64::new(bins[k].re, 0.0);
        } else {
            buf[k] = bins[k];
            buf[n - k] = bins[k].conj();
        }
    }
    inverse_plan(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Index of the DFT bin holding `freq`, or an error when `freq` falls
/// between bins or above Nyquist.
pub fn bin_index(freq: f64, len: usize, rate: f64) -> Result<usize> {
    let nyquist = rate / 2.0;
    if freq < 0.0 || freq > nyquist {
        return Err(Error::Aliasing { freq, nyquist });
    }
    let exact = freq * len as f64 / rate;
    let k = exact.round();
    if (exact - k).abs() > BIN_TOLERANCE * k.max(1.0) {
        return Err(Error::NotBinCentered { freq, len, rate });
    }
    Ok(k as usize)
}

fn normalization(k: usize, n: usize) -> f64 {
    if k == 0 || 2 * k == n {
        1.0 / n as f64
    } else {
        2.0 / n as f64
    }
}

/// Single normalized DFT coefficient at bin `k`, evaluated directly.
///
/// The phase index `k·n mod N` is reduced exactly so long windows keep full
/// precision.
pub fn dft_bin(x: &[f64], k: usize) -> Complex64 {
    let n = x.len();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = 0usize;
    for &v in x {
        let angle = -TAU * idx as f64 / n as f64;
        acc += Complex64::from_polar(v, angle);
        idx += k;
        if idx >= n {
            idx %= n;
        }
    }
    acc * normalization(k, n)
}

/// Normalized one-sided coefficient of `w` at a bin-centered frequency.
pub fn fft_coefficient(w: &Waveform, freq: f64) -> Result<Complex64> {
    let k = bin_index(freq, w.len(), w.rate())?;
    Ok(dft_bin(w.samples(), k))
}

/// One-sided spectrum of a real signal.
#[derive(Clone, Debug)]
pub struct Spectrum {
    rate: f64,
    len: usize,
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(w: &Waveform) -> Self {
        Self {
            rate: w.rate(),
            len: w.len(),
            bins: rfft(w.samples()),
        }
    }

    pub fn from_bins(bins: Vec<Complex64>, len: usize, rate: f64) -> Result<Self> {
        if bins.len() != len / 2 + 1 {
            return Err(Error::LengthMismatch(format!(
                "{} bins for a {len}-sample signal",
                bins.len()
            )));
        }
        Ok(Self { rate, len, bins })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Length of the time-domain signal.
    pub fn signal_len(&self) -> usize {
        self.len
    }

    pub fn bin_width(&self) -> f64 {
        self.rate / self.len as f64
    }

    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.bin_width()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.bins.len()).map(|k| self.frequency(k)).collect()
    }

    /// Raw (unnormalized) DFT bins.
    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    /// Amplitude-normalized coefficient at bin `k`.
    pub fn coefficient(&self, k: usize) -> Complex64 {
        self.bins[k] * normalization(k, self.len)
    }

    pub fn to_samples(&self) -> Vec<f64> {
        irfft(&self.bins, self.len)
    }
}
