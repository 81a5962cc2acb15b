//! Continuous-time rational transfer functions and their discrete-time
//! realization as cascaded biquads.
//!
//! Polynomials are stored highest power first, so `[m, b, k]` is
//! `m·s² + b·s + k`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Evaluates a polynomial (highest power first) at a complex point.
pub fn polyval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Product of two polynomials.
pub fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn strip_leading_zeros(coeffs: &[f64]) -> &[f64] {
    let first = coeffs
        .iter()
        .position(|&c| c != 0.0)
        .unwrap_or(coeffs.len());
    &coeffs[first..]
}

/// Roots of a polynomial with nonzero leading coefficient.
///
/// Degrees one and two use closed forms. Higher degrees take the companion
/// matrix eigenvalues and polish each with a few Newton steps.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let p = strip_leading_zeros(coeffs);
    let degree = p.len().saturating_sub(1);
    match degree {
        0 => Vec::new(),
        1 => vec![Complex64::new(-p[1] / p[0], 0.0)],
        2 => quadratic_roots(p[0], p[1], p[2]).to_vec(),
        _ => {
            let mut companion = DMatrix::<f64>::zeros(degree, degree);
            for j in 0..degree {
                companion[(0, j)] = -p[j + 1] / p[0];
            }
            for i in 1..degree {
                companion[(i, i - 1)] = 1.0;
            }
            let derivative: Vec<f64> = p[..degree]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (degree - i) as f64)
                .collect();
            companion
                .complex_eigenvalues()
                .iter()
                .map(|&z0| {
                    let mut z = z0;
                    for _ in 0..8 {
                        let d = polyval(&derivative, z);
                        if d.norm() == 0.0 {
                            break;
                        }
                        let step = polyval(p, z) / d;
                        z -= step;
                        if step.norm() <= 1e-15 * z.norm().max(1.0) {
                            break;
                        }
                    }
                    z
                })
                .collect()
        }
    }
}

/// Numerically careful roots of `a·x² + b·x + c` (with `a ≠ 0`).
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Groups roots into real monic factors: quadratics for conjugate pairs
/// (and for pairs of real roots), a linear factor for a leftover real root.
fn real_factors(mut rts: Vec<Complex64>) -> Vec<Vec<f64>> {
    let is_real = |z: &Complex64| z.im.abs() <= 1e-9 * z.norm().max(1e-300);
    let mut complex: Vec<Complex64> = rts
        .iter()
        .copied()
        .filter(|z| !is_real(z) && z.im > 0.0)
        .collect();
    rts.retain(|z| is_real(z));
    let mut factors: Vec<Vec<f64>> = complex
        .drain(..)
        .map(|z| vec![1.0, -2.0 * z.re, z.norm_sqr()])
        .collect();
    let mut reals: Vec<f64> = rts.iter().map(|z| z.re).collect();
    reals.sort_by(|a, b| a.total_cmp(b));
    for pair in reals.chunks(2) {
        factors.push(match pair {
            [r1, r2] => vec![1.0, -(r1 + r2), r1 * r2],
            [r] => vec![1.0, -r],
            _ => unreachable!(),
        });
    }
    factors
}

/// One continuous section `(b0 s² + b1 s + b2)/(a0 s² + a1 s + a2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSection {
    pub num: [f64; 3],
    pub den: [f64; 3],
}

impl ContinuousSection {
    fn from_polys(num: &[f64], den: &[f64]) -> Self {
        let pad = |p: &[f64]| {
            let mut out = [0.0; 3];
            out[3 - p.len()..].copy_from_slice(p);
            out
        };
        Self {
            num: pad(num),
            den: pad(den),
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        polyval(&self.num, s) / polyval(&self.den, s)
    }

    /// Bilinear transform `s = 2·rate·(1 − z⁻¹)/(1 + z⁻¹)` without prewarping.
    pub fn bilinear(&self, rate: f64) -> Biquad {
        let c = 2.0 * rate;
        let order = if self.num[0] != 0.0 || self.den[0] != 0.0 {
            2
        } else if self.num[1] != 0.0 || self.den[1] != 0.0 {
            1
        } else {
            0
        };
        // clearing (1 + z⁻¹)^order from numerator and denominator
        let map = |p: &[f64; 3]| match order {
            2 => {
                let (x2, x1, x0) = (p[0] * c * c, p[1] * c, p[2]);
                [x2 + x1 + x0, 2.0 * (x0 - x2), x2 - x1 + x0]
            }
            1 => {
                let (x1, x0) = (p[1] * c, p[2]);
                [x1 + x0, x0 - x1, 0.0]
            }
            _ => [p[2], 0.0, 0.0],
        };
        let b = map(&self.num);
        let a = map(&self.den);
        Biquad {
            b: [b[0] / a[0], b[1] / a[0], b[2] / a[0]],
            a: [a[1] / a[0], a[2] / a[0]],
        }
    }
}

/// Discrete second-order section `(b0 + b1 z⁻¹ + b2 z⁻²)/(1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Largest pole magnitude.
    pub fn pole_radius(&self) -> f64 {
        quadratic_roots(1.0, self.a[0], self.a[1])
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Transposed direct form II, in place.
    pub fn process(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }

    pub fn response(&self, freq: f64, rate: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -TAU * freq / rate);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }
}

/// Rational transfer function `gain · Π sections`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousTf {
    gain: f64,
    sections: Vec<ContinuousSection>,
}

impl ContinuousTf {
    /// Builds from numerator and denominator polynomials (highest power
    /// first) by factoring both into real sections.
    pub fn from_polys(num: &[f64], den: &[f64]) -> Result<Self> {
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("transfer function coefficients"));
        }
        let num = strip_leading_zeros(num);
        let den = strip_leading_zeros(den);
        if den.is_empty() {
            return Err(Error::invalid("denominator is identically zero"));
        }
        if num.is_empty() {
            return Ok(Self {
                gain: 0.0,
                sections: Vec::new(),
            });
        }
        if num.len() > den.len() {
            return Err(Error::invalid(format!(
                "improper transfer function: numerator degree {} exceeds denominator degree {}",
                num.len() - 1,
                den.len() - 1
            )));
        }
        let gain = num[0] / den[0];
        let num_factors = Self::factor(num);
        let den_factors = Self::factor(den);
        Ok(Self::pair(gain, num_factors, den_factors))
    }

    /// Builds from already-factored pieces; `num_factors` and `den_factors`
    /// are polynomials of degree at most two.
    pub fn from_factors(gain: f64, num_factors: &[&[f64]], den_factors: &[&[f64]]) -> Result<Self> {
        let check = |fs: &[&[f64]]| -> Result<Vec<Vec<f64>>> {
            fs.iter()
                .map(|f| {
                    let f = strip_leading_zeros(f);
                    if f.len() > 3 || f.is_empty() {
                        Err(Error::invalid(
                            "factor must be a nonzero polynomial of degree <= 2",
                        ))
                    } else if f.iter().any(|c| !c.is_finite()) {
                        Err(Error::NonFinite("transfer function factors"))
                    } else {
                        Ok(f.to_vec())
                    }
                })
                .collect()
        };
        let nf = check(num_factors)?;
        let df = check(den_factors)?;
        let ndeg: usize = nf.iter().map(|f| f.len() - 1).sum();
        let ddeg: usize = df.iter().map(|f| f.len() - 1).sum();
        if ndeg > ddeg {
            return Err(Error::invalid("improper transfer function"));
        }
        Ok(Self::pair(gain, nf, df))
    }

    fn factor(p: &[f64]) -> Vec<Vec<f64>> {
        // exact zeros at the origin come off first so they stay exact
        let zeros_at_origin = p.iter().rev().take_while(|&&c| c == 0.0).count();
        let reduced = &p[..p.len() - zeros_at_origin];
        let mut factors = real_factors(roots(reduced));
        let mut remaining = zeros_at_origin;
        while remaining >= 2 {
            factors.push(vec![1.0, 0.0, 0.0]);
            remaining -= 2;
        }
        if remaining == 1 {
            factors.push(vec![1.0, 0.0]);
        }
        factors
    }

    fn pair(gain: f64, mut num: Vec<Vec<f64>>, mut den: Vec<Vec<f64>>) -> Self {
        // highest-degree factors first so every section stays proper
        num.sort_by_key(|f| std::cmp::Reverse(f.len()));
        den.sort_by_key(|f| std::cmp::Reverse(f.len()));
        let count = num.len().max(den.len());
        let one = vec![1.0];
        let sections = (0..count)
            .map(|i| {
                ContinuousSection::from_polys(
                    num.get(i).unwrap_or(&one),
                    den.get(i).unwrap_or(&one),
                )
            })
            .collect();
        Self { gain, sections }
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn sections(&self) -> &[ContinuousSection] {
        &self.sections
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.sections
            .iter()
            .fold(Complex64::new(self.gain, 0.0), |acc, sec| acc * sec.eval(s))
    }

    /// `H(j2πf)`.
    pub fn response(&self, freq: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, TAU * freq))
    }

    /// Bilinear discretization; fails if any discrete pole is on or outside
    /// the unit circle.
    pub fn discretize(&self, rate: f64) -> Result<DiscreteTf> {
        let biquads: Vec<Biquad> = self.sections.iter().map(|s| s.bilinear(rate)).collect();
        for bq in &biquads {
            let r = bq.pole_radius();
            if !(r < 1.0) {
                return Err(Error::Unstable { pole_magnitude: r });
            }
        }
        Ok(DiscreteTf {
            gain: self.gain,
            biquads,
            rate,
        })
    }
}

/// Cascade of biquads at a fixed sample rate.
#[derive(Clone, Debug)]
pub struct DiscreteTf {
    gain: f64,
    biquads: Vec<Biquad>,
    rate: f64,
}

impl DiscreteTf {
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn biquads(&self) -> &[Biquad] {
        &self.biquads
    }

    /// Filters from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().map(|v| v * self.gain).collect();
        for bq in &self.biquads {
            bq.process(&mut y);
        }
        y
    }

    pub fn response(&self, freq: f64) -> Complex64 {
        self.biquads
            .iter()
            .fold(Complex64::new(self.gain, 0.0), |acc, bq| {
                acc * bq.response(freq, self.rate)
            })
    }
}

/// Filters `w` through `num(s)/den(s)` discretized at `w`'s rate. The output
/// keeps the input's unit; callers relabel it.
pub fn apply_lti(num: &[f64], den: &[f64], w: &Waveform) -> Result<Waveform> {
    apply_tf(&ContinuousTf::from_polys(num, den)?, w)
}

pub fn apply_tf(tf: &ContinuousTf, w: &Waveform) -> Result<Waveform> {
    let d = tf.discretize(w.rate())?;
    w.with_samples(d.filter(w.samples()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{fft_coefficient, Unit};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const RATE: f64 = 20_000.0;

    /// Steady-state complex gain at `f` measured on the last 4000 samples.
    fn measured_gain(tf: &ContinuousTf, f: f64, settle: usize) -> Complex64 {
        let n = settle + 4000;
        let x = Waveform::from_fn(n, RATE, Unit::Volt, |t| (TAU * f * t).cos()).unwrap();
        let y = apply_tf(tf, &x).unwrap();
        let tail = y.slice(settle..n).unwrap();
        let x_tail = x.slice(settle..n).unwrap();
        fft_coefficient(&tail, f).unwrap() / fft_coefficient(&x_tail, f).unwrap()
    }

    #[test]
    fn unity_is_identity() {
        let x = Waveform::from_fn(100, RATE, Unit::Volt, |t| (t * 1e3).sin()).unwrap();
        let y = apply_lti(&[2.0, 3.0], &[2.0, 3.0], &x).unwrap();
        for (a, b) in y.samples().iter().zip(x.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_dc_gain_and_corner() {
        let k = 0.0147;
        let wo = TAU * 961.0;
        let tf = ContinuousTf::from_polys(&[k * wo], &[1.0, wo]).unwrap();
        let step = Waveform::new(vec![1.0; 4000], RATE, Unit::Volt).unwrap();
        let y = apply_tf(&tf, &step).unwrap();
        assert_relative_eq!(*y.samples().last().unwrap(), k, max_relative = 1e-9);
        let g = measured_gain(&tf, 960.0, 4000);
        // 960 Hz is the nearest bin; correct for the 1 Hz offset analytically
        let expected = tf.response(960.0).norm();
        assert_relative_eq!(g.norm(), expected, max_relative = 0.01);
        assert_relative_eq!(
            tf.response(961.0).norm(),
            k / 2f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn discrete_response_tracks_continuous_below_a_twentieth_of_rate() {
        // bilinear warping grows like (πf/rate)²/3 per pole, so 1% holds to rate/20
        let tf = ContinuousTf::from_polys(&[1.0, 0.0], &[0.0015, 1.3, 444.0]).unwrap();
        let d = tf.discretize(RATE).unwrap();
        for f in [10.0, 86.6, 500.0, 1000.0] {
            let c = tf.response(f).norm();
            assert_relative_eq!(d.response(f).norm(), c, max_relative = 0.01);
        }
    }

    #[test]
    fn skin_gain_at_resonance_is_inverse_damping() {
        let tf = ContinuousTf::from_polys(&[1.0, 0.0], &[0.0015, 1.3, 444.0]).unwrap();
        let fn_hz = (444.0f64 / 0.0015).sqrt() / TAU;
        assert_relative_eq!(tf.response(fn_hz).norm(), 1.0 / 1.3, max_relative = 1e-12);
        let g = measured_gain(&tf, 85.0, 20_000);
        assert_relative_eq!(g.norm(), tf.response(85.0).norm(), max_relative = 0.02);
    }

    #[test]
    fn unstable_denominator_is_rejected() {
        let x = Waveform::zeros(10, RATE, Unit::Volt).unwrap();
        assert!(matches!(
            apply_lti(&[1.0], &[1.0, -100.0], &x),
            Err(Error::Unstable { .. })
        ));
        assert!(apply_lti(&[1.0, 0.0, 0.0], &[1.0, 1.0], &x).is_err());
    }

    #[test]
    fn quartic_factoring_matches_polynomial() {
        let a = [1.0, 0.2 * TAU * 1714.0, (TAU * 1714.0f64).powi(2)];
        let b = [1.0, 1e-4, (TAU * 856.0f64).powi(2)];
        let den = polymul(&a, &b);
        let num = polymul(&[1.0, 92.0, (TAU * 922.0f64).powi(2)], &[1.0, 0.0]);
        let tf = ContinuousTf::from_polys(&num, &den).unwrap();
        for f in [30.0, 400.0, 855.0, 1200.0, 3000.0] {
            let s = Complex64::new(0.0, TAU * f);
            let direct = polyval(&num, s) / polyval(&den, s);
            assert_relative_eq!(
                (tf.eval(s) - direct).norm() / direct.norm(),
                0.0,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn companion_roots_of_known_cubic() {
        // (s + 1)(s + 2)(s + 3)
        let mut r: Vec<f64> = roots(&[1.0, 6.0, 11.0, 6.0]).iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.total_cmp(b));
        for (got, want) in r.iter().zip([-3.0, -2.0, -1.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn factored_form_evaluates_like_polynomials(
            z in proptest::collection::vec(-5.0f64..5.0, 2),
            p in proptest::collection::vec(0.1f64..5.0, 3),
            w in 0.01f64..20.0,
        ) {
            let num = polymul(&[1.0, z[0]], &[1.0, z[1]]);
            let den = polymul(&polymul(&[1.0, p[0]], &[1.0, p[1]]), &[1.0, p[2]]);
            let tf = ContinuousTf::from_polys(&num, &den).unwrap();
            let s = Complex64::new(0.0, w);
            let direct = polyval(&num, s) / polyval(&den, s);
            prop_assert!((tf.eval(s) - direct).norm() <= 1e-8 * direct.norm().max(1e-12));
        }
    }
}
