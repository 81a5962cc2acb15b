//! On-disk formats: waveform files, trial directories and the tabular
//! outputs of the identification pipeline.

mod tables;
mod trial;
mod waveform;

pub use tables::{
    read_fits_csv, read_frf_points_csv, read_json, write_correlations_csv, write_fits_csv,
    write_frf_points_csv, write_json, CellFit, CorrelationRow, CORRELATION_PAIRS,
};
pub use trial::{find_trials, grid_dir, load_trial, save_trial};
pub use waveform::{
    read_waveform, read_waveform_bin, read_waveform_csv, write_waveform, write_waveform_bin,
    write_waveform_csv, WaveformFormat,
};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}
