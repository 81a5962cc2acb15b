use crate::plant::SetupModel;
use crate::preprocess::FrfPointSet;

/// Points whose rig gain is below this fraction of the largest gain over the
/// set's frequencies are dropped rather than divided.
pub const MIN_SETUP_GAIN_FRACTION: f64 = 1e-6;

/// Divides the lateral rig transmissibility out of friction points.
pub fn remove_setup(points: &FrfPointSet, setup: &SetupModel) -> FrfPointSet {
    let gain = |f: f64| setup.lateral.transmissibility(f);
    let peak = points
        .entries
        .iter()
        .map(|p| gain(p.freq_hz).norm())
        .fold(0.0, f64::max);
    let mut kept = Vec::with_capacity(points.len());
    for p in &points.entries {
        let t = gain(p.freq_hz);
        if t.norm() < MIN_SETUP_GAIN_FRACTION * peak {
            log::warn!(
                "dropping {} Hz point: rig gain {:.3e} is too small to divide by",
                p.freq_hz,
                t.norm()
            );
            continue;
        }
        let mut q = *p;
        q.response = p.response / t;
        kept.push(q);
    }
    FrfPointSet::new(kept)
}

/// Converts skin points measured against the sensor force into points
/// against the force at the fingertip, by undoing the rig's colouring of the
/// denominator.
pub fn correct_skin(points: &FrfPointSet, setup: &SetupModel) -> FrfPointSet {
    FrfPointSet::new(
        points
            .entries
            .iter()
            .map(|p| {
                let mut q = *p;
                q.response = p.response * setup.lateral.transmissibility(p.freq_hz);
                q
            })
            .collect(),
    )
}
