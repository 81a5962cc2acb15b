//! Signal processing, simulation and identification for electrovibration
//! friction experiments.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod empirical;
pub mod error;
pub mod io;
pub mod lti;
pub mod plant;
pub mod preprocess;
pub mod render;
pub mod signal;
pub mod sysid;

pub use error::{Error, Result};
pub use signal::{Unit, Waveform};
