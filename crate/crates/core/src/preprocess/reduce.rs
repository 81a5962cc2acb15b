use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{Spectrum, Waveform};

/// Dominant eigenvector of a 2×2 Hermitian matrix `[[a, b], [b*, d]]`,
/// scaled so its second component is real and non-negative. Ties fall on
/// the second axis.
fn dominant_direction(a: f64, b: Complex64, d: f64) -> (Complex64, Complex64) {
    if b.norm() == 0.0 {
        return if a > d {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
        };
    }
    let half = 0.5 * (a - d);
    let lambda = 0.5 * (a + d) + (half * half + b.norm_sqr()).sqrt();
    // (A − λI)u = 0 gives u ∝ (b, λ − a), with λ − a ≥ 0 real
    let ux = b;
    let uy = Complex64::new(lambda - a, 0.0);
    let norm = (ux.norm_sqr() + uy.norm_sqr()).sqrt();
    (ux / norm, uy / norm)
}

/// Collapses a two-axis lateral force into one dimension, bin by bin.
///
/// Each bin's complex pair `(FX, FY)` is projected on the principal
/// direction of the pair covariance summed over all bins. The output keeps
/// the full magnitude `√(|FX|² + |FY|²)` and takes its phase from the
/// projection.
pub fn reduce_lateral_to_1d(fx: &Waveform, fy: &Waveform) -> Result<Waveform> {
    fx.ensure_compatible(fy)?;
    if fx.unit() != fy.unit() {
        return Err(Error::invalid(format!(
            "force axes carry different units ({} vs {})",
            fx.unit(),
            fy.unit()
        )));
    }
    let sx = Spectrum::of(fx);
    let sy = Spectrum::of(fy);
    let (mut a, mut b, mut d) = (0.0, Complex64::new(0.0, 0.0), 0.0);
    for (x, y) in sx.bins().iter().zip(sy.bins()) {
        a += x.norm_sqr();
        d += y.norm_sqr();
        b += x * y.conj();
    }
    let (ux, uy) = dominant_direction(a, b, d);
    let n = fx.len();
    let bins: Vec<Complex64> = sx
        .bins()
        .iter()
        .zip(sy.bins())
        .enumerate()
        .map(|(k, (x, y))| {
            let magnitude = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let projection = ux.conj() * x + uy.conj() * y;
            if k == 0 || 2 * k == n {
                // these bins are real; keep the sign of the projection
                let sign = if projection.re < 0.0 { -1.0 } else { 1.0 };
                Complex64::new(sign * magnitude, 0.0)
            } else if projection.norm() == 0.0 {
                Complex64::new(magnitude, 0.0)
            } else {
                projection / projection.norm() * magnitude
            }
        })
        .collect();
    let out = Spectrum::from_bins(bins, n, fx.rate())?;
    fx.with_samples(out.to_samples())
}
