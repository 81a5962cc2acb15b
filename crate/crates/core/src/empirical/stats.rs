use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Which identified parameter a sample holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    /// Friction gain, N/V.
    K,
    /// Friction cutoff, Hz.
    CutoffHz,
    /// Skin mass, kg.
    Mass,
    /// Skin damping, N·s/m.
    Damping,
    /// Skin stiffness, N/m.
    Stiffness,
}

impl Parameter {
    pub fn label(self) -> &'static str {
        match self {
            Parameter::K => "K",
            Parameter::CutoffHz => "omega_o",
            Parameter::Mass => "m",
            Parameter::Damping => "b",
            Parameter::Stiffness => "k",
        }
    }
}

/// One fitted parameter value for a (speed, force, participant) cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSample {
    pub speed: f64,
    pub force: f64,
    pub participant: u32,
    pub value: f64,
    pub parameter: Parameter,
}

/// Least-squares fit of `value = β₀ + β₁·force + β₂·speed + β₃·force·speed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub coef_force: f64,
    pub coef_speed: f64,
    pub coef_interaction: f64,
    /// Standard errors in the same order as the coefficients.
    pub std_errors: [f64; 4],
    pub r_squared: f64,
    pub n: usize,
}

impl LinearFit {
    pub fn coefficients(&self) -> [f64; 4] {
        [
            self.intercept,
            self.coef_force,
            self.coef_speed,
            self.coef_interaction,
        ]
    }

    pub fn predict(&self, force: f64, speed: f64) -> f64 {
        self.intercept
            + self.coef_force * force
            + self.coef_speed * speed
            + self.coef_interaction * force * speed
    }
}

pub(crate) struct OlsSolution {
    pub coefs: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
}

/// Solves a least-squares problem through a Householder QR factorization.
pub(crate) fn least_squares(design: DMatrix<f64>, y: &[f64]) -> Result<OlsSolution> {
    let (n, p) = design.shape();
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} samples for {p} coefficients"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) || design.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    let yv = DVector::from_column_slice(y);
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    let residuals = &yv - &design * &beta;
    let rss = residuals.norm_squared();
    let mean = yv.mean();
    let tss: f64 = yv.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let sigma2 = rss / (n - p) as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::RankDeficient)?;
    // (RᵀR)⁻¹ = R⁻¹R⁻ᵀ; only its diagonal is needed
    let std_errors = (0..p)
        .map(|i| (sigma2 * r_inv.row(i).norm_squared()).sqrt())
        .collect();
    Ok(OlsSolution {
        coefs: beta.iter().copied().collect(),
        std_errors,
        r_squared,
    })
}

/// Fixed-effects fit with force, speed and their interaction.
pub fn ols_fit(samples: &[ParameterSample]) -> Result<LinearFit> {
    if samples.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "regression needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    let design = DMatrix::from_fn(samples.len(), 4, |i, j| {
        let s = &samples[i];
        match j {
            0 => 1.0,
            1 => s.force,
            2 => s.speed,
            _ => s.force * s.speed,
        }
    });
    let y: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let sol = least_squares(design, &y)?;
    Ok(LinearFit {
        intercept: sol.coefs[0],
        coef_force: sol.coefs[1],
        coef_speed: sol.coefs[2],
        coef_interaction: sol.coefs[3],
        std_errors: [
            sol.std_errors[0],
            sol.std_errors[1],
            sol.std_errors[2],
            sol.std_errors[3],
        ],
        r_squared: sol.r_squared,
        n: samples.len(),
    })
}

/// Straight-line fit `value = β₀ + β₂·speed`, returning `(β₀, β₂)`.
pub fn speed_only_fit(samples: &[ParameterSample]) -> Result<(f64, f64)> {
    let design = DMatrix::from_fn(samples.len(), 2, |i, j| {
        if j == 0 {
            1.0
        } else {
            samples[i].speed
        }
    });
    let y: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let sol = least_squares(design, &y)?;
    Ok((sol.coefs[0], sol.coefs[1]))
}

/// Sample correlation and its two-sided p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Pearson correlation with the exact t-distribution p-value,
/// `p = I_{ν/(ν+t²)}(ν/2, 1/2)` for `ν = n − 2` degrees of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(format!(
            "{} vs {} values",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs 3 pairs, got {n}"
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input"));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first variable"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second variable"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: correlation_p_value(r, n),
        n,
    })
}

/// Two-sided p-value of a sample correlation `r` from `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let dof = (n - 2) as f64;
    let one_minus = 1.0 - r * r;
    if one_minus <= 0.0 {
        return 0.0;
    }
    let t2 = r * r * dof / one_minus;
    beta_reg(dof / 2.0, 0.5, dof / (dof + t2))
}
