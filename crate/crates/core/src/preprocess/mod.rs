//! Turns raw trial recordings into per-sweep frequency-response points.

mod align;
mod frf;
mod reduce;
mod speed;
mod sweeps;

pub use align::{align_accelerometer, alignment_matrix};
pub use frf::{
    analyze_trial, extract_windows, frf_point, skin_point, Condition, FrfPoint, FrfPointSet,
    SweepWindow, TrialAnalysis, MIN_MESSAGE_FRACTION,
};
pub use reduce::reduce_lateral_to_1d;
pub use speed::estimate_speed;
pub use sweeps::{
    assign_directions, detect_sweeps, moving_average, SweepSegment, SMOOTHING_S, WINDOW_LEFT,
    WINDOW_RIGHT,
};
