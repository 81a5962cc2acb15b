use crate::error::{Error, Result};
use crate::plant::PositionTrace;

/// Sliding speed in mm/s: the median over strictly increasing runs of each
/// run's end-to-end slope. Falls back to decreasing runs when there are no
/// increasing ones, and to zero for a stationary finger.
///
/// Whole-run slopes are insensitive to the 0.1 mm quantization that biases
/// per-interval differences.
pub fn estimate_speed(position: &PositionTrace) -> Result<f64> {
    if position.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "speed needs at least 2 position samples, got {}",
            position.len()
        )));
    }
    let increasing = run_slopes(position, |d| d > 0.0);
    let slopes = if increasing.is_empty() {
        run_slopes(position, |d| d < 0.0)
    } else {
        increasing
    };
    if slopes.is_empty() {
        return Ok(0.0);
    }
    Ok(median(slopes.into_iter().map(f64::abs).collect()))
}

fn run_slopes(p: &PositionTrace, step_ok: impl Fn(f64) -> bool) -> Vec<f64> {
    let mut slopes = Vec::new();
    let mut start = 0;
    for i in 1..=p.len() {
        let continues = i < p.len() && step_ok(p.mm[i] - p.mm[i - 1]);
        if !continues {
            let end = i - 1;
            if end > start {
                slopes.push((p.mm[end] - p.mm[start]) / (p.times_s[end] - p.times_s[start]));
            }
            start = i;
        }
    }
    slopes
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trace(f: impl Fn(f64) -> f64, n: usize) -> PositionTrace {
        let t: Vec<f64> = (0..n).map(|j| j as f64 / 60.0).collect();
        let x = t.iter().map(|&t| f(t)).collect();
        PositionTrace::new(t, x).unwrap()
    }

    #[test]
    fn linear_ramp() {
        let p = trace(|t| 40.0 * t, 61);
        assert_relative_eq!(estimate_speed(&p).unwrap(), 40.0, max_relative = 1e-12);
    }

    #[test]
    fn stationary_finger() {
        assert_eq!(estimate_speed(&trace(|_| 12.3, 30)).unwrap(), 0.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(estimate_speed(&trace(|t| t, 1)).is_err());
    }
}
