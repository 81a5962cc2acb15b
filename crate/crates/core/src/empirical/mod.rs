//! Regression of fitted parameters on speed and force, Pearson correlation
//! and assembly of the speed-dependent friction law.

mod model;
mod stats;

pub use model::{evaluate_model, EmpiricalSpeedModel, Validity};
pub use stats::{
    correlation_p_value, ols_fit, pearson, speed_only_fit, Correlation, LinearFit, Parameter,
    ParameterSample,
};

use crate::error::{Error, Result};

/// Averages the gain samples and regresses the cutoff samples on speed.
///
/// The cutoff law is refit with speed as the only regressor, which leaves
/// the intercept and slope as averages over the force levels present.
pub fn build_empirical_model(
    k_samples: &[ParameterSample],
    omega_samples: &[ParameterSample],
) -> Result<EmpiricalSpeedModel> {
    if k_samples.is_empty() || omega_samples.is_empty() {
        return Err(Error::InsufficientData(
            "empirical model needs gain and cutoff samples".into(),
        ));
    }
    let distinct_speeds = {
        let mut s: Vec<f64> = omega_samples.iter().map(|x| x.speed).collect();
        s.sort_by(|a, b| a.total_cmp(b));
        s.dedup();
        s.len()
    };
    if distinct_speeds < 2 || omega_samples.len() < 3 {
        return Err(Error::InsufficientData(
            "speed slope is undefined without at least two speed levels and three samples".into(),
        ));
    }
    let k_bar = k_samples.iter().map(|s| s.value).sum::<f64>() / k_samples.len() as f64;
    let (intercept_hz, slope_hz_per_mm_s) = speed_only_fit(omega_samples)?;
    let model = EmpiricalSpeedModel {
        k_bar,
        intercept_hz,
        slope_hz_per_mm_s,
        validity: Validity::default(),
    };
    model.validate()?;
    Ok(model)
}
