//! Frequency-domain model fitting and removal of the rig's own dynamics.

mod fit;
mod optim;
mod setup;

pub use fit::{
    first_order_cost_gradient, fit_cost, fit_first_order, fit_second_order, fit_setup_lateral,
    fit_setup_normal, FitFlag, FitResult, FittedModel, DEFAULT_BAND_MAX_HZ, RESIDUAL_THRESHOLD,
};
pub use optim::Bounds;
pub use setup::{correct_skin, remove_setup, MIN_SETUP_GAIN_FRACTION};
