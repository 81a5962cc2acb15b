use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{FirstOrderFrictionModel, LateralSetup, NormalSetup, SkinModel};
use crate::preprocess::{FrfPoint, FrfPointSet};
use crate::sysid::optim::{cost_gradient, multistart, Bounds, Problem};

/// Default upper frequency for the friction and skin fits, Hz. The rig's
/// first resonance sits just above it.
pub const DEFAULT_BAND_MAX_HZ: f64 = 750.0;
/// Mean squared complex-log error above which a fit is not trusted. It
/// corresponds to roughly 10% RMS combined magnitude and phase error.
pub const RESIDUAL_THRESHOLD: f64 = 0.01;
/// Relative distance (in log units of the box width) that counts as "at a
/// bound".
const BOUND_PROXIMITY: f64 = 1e-3;

/// Something about a fit the caller should know.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "snake_case")]
pub enum FitFlag {
    /// The named parameter finished on its bound.
    AtBound {
        parameter: String,
    },
    ResidualAboveThreshold,
    /// Two or more parameters are pinned, so the data do not determine them
    /// separately.
    Unidentifiable,
    /// The lateral mounting section is flat across the band.
    DegenerateBiquad,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    FirstOrder(FirstOrderFrictionModel),
    Skin(SkinModel),
    NormalSetup(NormalSetup),
    LateralSetup(LateralSetup),
}

impl FittedModel {
    pub fn response(&self, freq: f64) -> Complex64 {
        match self {
            FittedModel::FirstOrder(m) => m.response(freq),
            FittedModel::Skin(m) => m.velocity_response(freq),
            FittedModel::NormalSetup(m) => m.response(freq),
            FittedModel::LateralSetup(m) => m.response(freq),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "params")]
    pub model: FittedModel,
    /// Mean squared complex-log error at the optimum.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Lowest and highest frequency used, Hz.
    #[serde(rename = "band")]
    pub band_hz: [f64; 2],
    pub points: usize,
    pub flags: Vec<FitFlag>,
}

/// Complex-log residual pair `ln(H_model/H_data)`: log-magnitude error and
/// the principal argument of the ratio. Taking the argument of the ratio
/// sidesteps phase unwrapping as long as the model is within π of the data.
fn log_ratio(model: Complex64, data: Complex64) -> [f64; 2] {
    let ratio = model / data;
    let l = ratio.ln();
    if l.re.is_finite() && l.im.is_finite() {
        [l.re, l.im]
    } else {
        [1e6, 1e6]
    }
}

struct Spec<'a> {
    names: &'a [&'a str],
    bounds: Bounds,
    response: &'a (dyn Fn(&[f64], f64) -> Complex64 + Sync),
    min_freqs: usize,
}

fn select(points: &FrfPointSet, lo: f64, hi: f64) -> Vec<(f64, Complex64)> {
    points
        .entries
        .iter()
        .filter(|p| p.freq_hz >= lo && p.freq_hz <= hi && p.response.norm() > 0.0)
        .map(|p| (p.freq_hz, p.response))
        .collect()
}

fn distinct_freqs(data: &[(f64, Complex64)]) -> usize {
    let mut f: Vec<f64> = data.iter().map(|d| d.0).collect();
    f.sort_by(|a, b| a.total_cmp(b));
    f.dedup();
    f.len()
}

struct RawFit {
    theta: Vec<f64>,
    residual: f64,
    iterations: usize,
    band_hz: [f64; 2],
    points: usize,
    flags: Vec<FitFlag>,
}

fn run_fit(spec: &Spec<'_>, data: &[(f64, Complex64)], starts: &[Vec<f64>]) -> Result<RawFit> {
    let distinct = distinct_freqs(data);
    if distinct < spec.min_freqs {
        return Err(Error::InsufficientData(format!(
            "fit needs at least {} distinct frequencies in band, got {distinct}",
            spec.min_freqs
        )));
    }
    let residuals = |theta: &[f64]| -> Vec<f64> {
        data.iter()
            .flat_map(|&(f, h)| log_ratio((spec.response)(theta, f), h))
            .collect()
    };
    let problem = Problem {
        residuals: &residuals,
        bounds: &spec.bounds,
        normalizer: data.len() as f64,
    };
    let best = multistart(&problem, starts);
    let theta: Vec<f64> = best.u.iter().map(|u| u.exp()).collect();

    let mut flags = Vec::new();
    let pinned = spec.bounds.pinned(&theta, BOUND_PROXIMITY);
    for &i in &pinned {
        flags.push(FitFlag::AtBound {
            parameter: spec.names[i].to_string(),
        });
    }
    if pinned.len() >= 2 {
        flags.push(FitFlag::Unidentifiable);
    }
    if !(best.cost <= RESIDUAL_THRESHOLD) {
        flags.push(FitFlag::ResidualAboveThreshold);
    }
    let lo = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(RawFit {
        theta,
        residual: best.cost,
        iterations: best.iterations,
        band_hz: [lo, hi],
        points: data.len(),
        flags,
    })
}

fn finish(raw: RawFit, model: FittedModel) -> FitResult {
    let converged = raw.flags.is_empty() && raw.residual.is_finite();
    FitResult {
        model,
        residual: raw.residual,
        iterations: raw.iterations,
        converged,
        band_hz: raw.band_hz,
        points: raw.points,
        flags: raw.flags,
    }
}

fn first_order_spec() -> Spec<'static> {
    Spec {
        names: &["k", "omega_o"],
        bounds: Bounds::new(&[(1e-5, 1.0), (TAU * 50.0, TAU * 5000.0)]),
        response: &|t, f| t[0] * t[1] / Complex64::new(t[1], TAU * f),
        min_freqs: 4,
    }
}

/// Fits `K·ω_o/(s + ω_o)` to the points at or below `band_max` Hz.
pub fn fit_first_order(points: &FrfPointSet, band_max: f64) -> Result<FitResult> {
    let spec = first_order_spec();
    let data = select(points, 0.0, band_max);
    let raw = run_fit(&spec, &data, &spec.bounds.log_grid(3))?;
    let model = FirstOrderFrictionModel::new(raw.theta[0], raw.theta[1])?;
    Ok(finish(raw, FittedModel::FirstOrder(model)))
}

fn skin_spec() -> Spec<'static> {
    Spec {
        names: &["m", "b", "k"],
        bounds: Bounds::new(&[(1e-4, 1e-1), (0.05, 50.0), (10.0, 1e5)]),
        response: &|t, f| {
            let s = Complex64::new(0.0, TAU * f);
            s / (t[0] * s * s + t[1] * s + t[2])
        },
        min_freqs: 5,
    }
}

/// Fits the skin mobility `s/(m s² + b s + k)` to the points at or below
/// `band_max` Hz.
pub fn fit_second_order(points: &FrfPointSet, band_max: f64) -> Result<FitResult> {
    let spec = skin_spec();
    let data = select(points, 0.0, band_max);
    let mut raw = run_fit(&spec, &data, &spec.bounds.log_grid(3))?;
    // Mass and stiffness show up only through the resonance, so either one
    // on its bound means the data do not resolve it.
    let pinned = spec.bounds.pinned(&raw.theta, BOUND_PROXIMITY);
    if (pinned.contains(&0) || pinned.contains(&2)) && !raw.flags.contains(&FitFlag::Unidentifiable)
    {
        raw.flags.push(FitFlag::Unidentifiable);
    }
    let model = SkinModel::new(raw.theta[0], raw.theta[1], raw.theta[2])?;
    Ok(finish(raw, FittedModel::Skin(model)))
}

/// Averaged magnitude per frequency, sorted.
fn magnitude_curve(data: &[(f64, Complex64)]) -> Vec<(f64, f64)> {
    let points: Vec<FrfPoint> = data
        .iter()
        .map(|&(f, h)| FrfPoint {
            freq_hz: f,
            response: h,
            sweep: 0,
            condition: crate::preprocess::Condition {
                speed_mm_s: 0.0,
                force_n: 0.0,
                participant: 0,
            },
        })
        .collect();
    FrfPointSet::averaged(&points)
        .into_iter()
        .map(|(f, h)| (f, h.norm()))
        .collect()
}

/// Local maxima of a sampled magnitude curve, largest first.
fn sampled_peaks(curve: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut peaks: Vec<(f64, f64)> = curve
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1)
        .map(|w| w[1])
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks
}

/// Fits the normal-direction rig model to impact-test points.
pub fn fit_setup_normal(impact: &FrfPointSet) -> Result<FitResult> {
    let spec = Spec {
        names: &["k_snd", "omega_n", "zeta"],
        bounds: Bounds::new(&[(1e-3, 1e2), (TAU * 50.0, TAU * 5000.0), (1e-3, 1.0)]),
        response: &|t, f| {
            NormalSetup {
                k_snd: t[0],
                omega_n: t[1],
                zeta: t[2],
            }
            .response(f)
        },
        min_freqs: 5,
    };
    let data = select(impact, 0.0, f64::INFINITY);
    let mut starts = spec.bounds.log_grid(3);
    let curve = magnitude_curve(&data);
    if let (Some(&(f_peak, _)), Some(&(f0, m0))) = (sampled_peaks(&curve).first(), curve.first()) {
        // below resonance the model is K·s
        let k0 = m0 / (TAU * f0);
        for zeta in [0.005, 0.02, 0.1] {
            starts.insert(0, vec![k0, TAU * f_peak, zeta]);
        }
    }
    let raw = run_fit(&spec, &data, &starts)?;
    let model = NormalSetup {
        k_snd: raw.theta[0],
        omega_n: raw.theta[1],
        zeta: raw.theta[2],
    };
    Ok(finish(raw, FittedModel::NormalSetup(model)))
}

fn lateral_from(t: &[f64]) -> LateralSetup {
    LateralSetup {
        omega_n: t[0],
        zeta: t[1],
        b3: 1.0,
        b2: t[2],
        b1: t[3],
        a3: 1.0,
        a2: t[4],
        a1: t[5],
    }
}

/// Fits the lateral rig model (leading biquad coefficients fixed at one) to
/// impact-test points.
pub fn fit_setup_lateral(impact: &FrfPointSet) -> Result<FitResult> {
    let w2 = |lo: f64, hi: f64| ((TAU * lo).powi(2), (TAU * hi).powi(2));
    let spec = Spec {
        names: &["omega_n", "zeta", "b2", "b1", "a2", "a1"],
        bounds: Bounds::new(&[
            (TAU * 50.0, TAU * 5000.0),
            (1e-3, 1.0),
            (1e-6, 1e5),
            w2(20.0, 5000.0),
            (1e-6, 1e5),
            w2(20.0, 5000.0),
        ]),
        response: &|t, f| lateral_from(t).response(f),
        min_freqs: 7,
    };
    let data = select(impact, 0.0, f64::INFINITY);
    let curve = magnitude_curve(&data);
    let peaks = sampled_peaks(&curve);
    let mut starts = Vec::new();
    if peaks.len() >= 2 {
        let (lo_peak, hi_peak) = if peaks[0].0 < peaks[1].0 {
            (peaks[0].0, peaks[1].0)
        } else {
            (peaks[1].0, peaks[0].0)
        };
        let a1 = (TAU * lo_peak).powi(2);
        let (f0, m0) = curve[0];
        // below both resonances the model is s·b1/a1
        let b1 = (a1 * m0 / (TAU * f0)).clamp(spec.bounds.lower[3], spec.bounds.upper[3]);
        for zeta in [0.01, 0.05, 0.2] {
            for zeta_pole in [1e-4, 1e-2, 0.1] {
                for zeta_zero in [1e-3, 1e-2, 0.1] {
                    starts.push(vec![
                        TAU * hi_peak,
                        zeta,
                        2.0 * zeta_zero * b1.sqrt(),
                        b1,
                        2.0 * zeta_pole * a1.sqrt(),
                        a1,
                    ]);
                }
            }
        }
    }
    if starts.is_empty() {
        starts = spec.bounds.log_grid(2);
    }
    let mut raw = run_fit(&spec, &data, &starts)?;
    let model = lateral_from(&raw.theta);
    let flat = curve
        .iter()
        .all(|&(f, _)| (mounting_shape(&model, f) - 1.0).norm() < 0.02);
    if flat {
        raw.flags.push(FitFlag::DegenerateBiquad);
    }
    Ok(finish(raw, FittedModel::LateralSetup(model)))
}

/// Mounting biquad normalized to its DC value.
fn mounting_shape(l: &LateralSetup, f: f64) -> Complex64 {
    let s = Complex64::new(0.0, TAU * f);
    let num = l.b3 * s * s + l.b2 * s + l.b1;
    let den = l.a3 * s * s + l.a2 * s + l.a1;
    num / den * (l.a1 / l.b1)
}

/// Complex-log cost of `model` on the points at or below `band_max`, on the
/// same scale as [`FitResult::residual`].
pub fn fit_cost(model: &FittedModel, points: &FrfPointSet, band_max: f64) -> f64 {
    let data = select(points, 0.0, band_max);
    let ss: f64 = data
        .iter()
        .map(|&(f, h)| {
            let [a, b] = log_ratio(model.response(f), h);
            a * a + b * b
        })
        .sum();
    ss / data.len() as f64
}

/// Gradient of the first-order cost with respect to `(ln K, ln ω_o)`.
pub fn first_order_cost_gradient(
    model: &FirstOrderFrictionModel,
    points: &FrfPointSet,
    band_max: f64,
) -> [f64; 2] {
    let spec = first_order_spec();
    let data = select(points, 0.0, band_max);
    let residuals = |theta: &[f64]| -> Vec<f64> {
        data.iter()
            .flat_map(|&(f, h)| log_ratio((spec.response)(theta, f), h))
            .collect()
    };
    let problem = Problem {
        residuals: &residuals,
        bounds: &spec.bounds,
        normalizer: data.len() as f64,
    };
    let g = cost_gradient(&problem, &[model.k.ln(), model.omega_o.ln()]);
    [g[0], g[1]]
}
