use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::empirical::{Correlation, Parameter, ParameterSample};
use crate::error::{Error, Result};
use crate::io::create_parent;
use crate::io::waveform::csv_error;
use crate::preprocess::{Condition, FrfPoint, FrfPointSet};

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct FrfRow {
    freq_hz: f64,
    re: f64,
    im: f64,
    sweep: usize,
    speed_mm_s: f64,
    force_n: f64,
    participant: u32,
}

pub fn write_frf_points_csv(path: &Path, points: &FrfPointSet) -> Result<()> {
    let rows = points.entries.iter().map(|p| FrfRow {
        freq_hz: p.freq_hz,
        re: p.response.re,
        im: p.response.im,
        sweep: p.sweep,
        speed_mm_s: p.condition.speed_mm_s,
        force_n: p.condition.force_n,
        participant: p.condition.participant,
    });
    write_rows(
        path,
        &[
            "freq_hz",
            "re",
            "im",
            "sweep",
            "speed_mm_s",
            "force_n",
            "participant",
        ],
        rows,
    )
}

pub fn read_frf_points_csv(path: &Path) -> Result<FrfPointSet> {
    let rows: Vec<FrfRow> = read_rows(path)?;
    let mut entries = Vec::with_capacity(rows.len());
    for r in rows {
        let values = [r.freq_hz, r.re, r.im, r.speed_mm_s, r.force_n];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(path, "non-finite value in FRF table"));
        }
        entries.push(FrfPoint {
            freq_hz: r.freq_hz,
            response: Complex64::new(r.re, r.im),
            sweep: r.sweep,
            condition: Condition {
                speed_mm_s: r.speed_mm_s,
                force_n: r.force_n,
                participant: r.participant,
            },
        });
    }
    Ok(FrfPointSet::new(entries))
}

/// Fitted parameters of one (participant, speed, force) cell. The skin
/// columns are empty when the skin fit was not run or failed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFit {
    pub participant: u32,
    pub speed_mm_s: f64,
    pub force_n: f64,
    /// N/V
    pub k_n_per_v: f64,
    pub cutoff_hz: f64,
    pub friction_residual: f64,
    pub friction_converged: bool,
    pub mass_kg: Option<f64>,
    pub damping_ns_per_m: Option<f64>,
    pub stiffness_n_per_m: Option<f64>,
    pub skin_residual: Option<f64>,
    pub skin_converged: Option<bool>,
}

const FIT_COLUMNS: [&str; 12] = [
    "participant",
    "speed_mm_s",
    "force_n",
    "k_n_per_v",
    "cutoff_hz",
    "friction_residual",
    "friction_converged",
    "mass_kg",
    "damping_ns_per_m",
    "stiffness_n_per_m",
    "skin_residual",
    "skin_converged",
];

impl CellFit {
    pub fn value(&self, parameter: Parameter) -> Option<f64> {
        match parameter {
            Parameter::K => Some(self.k_n_per_v),
            Parameter::CutoffHz => Some(self.cutoff_hz),
            Parameter::Mass => self.mass_kg,
            Parameter::Damping => self.damping_ns_per_m,
            Parameter::Stiffness => self.stiffness_n_per_m,
        }
    }

    pub fn sample(&self, parameter: Parameter) -> Option<ParameterSample> {
        self.value(parameter).map(|value| ParameterSample {
            speed: self.speed_mm_s,
            force: self.force_n,
            participant: self.participant,
            value,
            parameter,
        })
    }
}

pub fn write_fits_csv(path: &Path, fits: &[CellFit]) -> Result<()> {
    write_rows(path, &FIT_COLUMNS, fits.iter().copied())
}

pub fn read_fits_csv(path: &Path) -> Result<Vec<CellFit>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers != FIT_COLUMNS.as_slice() {
        return Err(Error::format(
            path,
            format!("unexpected header {headers:?}"),
        ));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

/// The friction-against-skin parameter pairs that get correlated.
pub const CORRELATION_PAIRS: [(Parameter, Parameter); 6] = [
    (Parameter::K, Parameter::Mass),
    (Parameter::CutoffHz, Parameter::Mass),
    (Parameter::K, Parameter::Damping),
    (Parameter::CutoffHz, Parameter::Damping),
    (Parameter::K, Parameter::Stiffness),
    (Parameter::CutoffHz, Parameter::Stiffness),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    /// `<friction>-<skin>` label such as `K-m` or `omega_o-k`.
    pub pair: String,
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

impl CorrelationRow {
    pub fn new(x: Parameter, y: Parameter, c: Correlation) -> Self {
        Self {
            pair: format!("{}-{}", x.label(), y.label()),
            r: c.r,
            p: c.p,
            n: c.n,
        }
    }
}

pub fn write_correlations_csv(path: &Path, rows: &[CorrelationRow]) -> Result<()> {
    write_rows(path, &["pair", "r", "p", "n"], rows.iter().cloned())
}

/// Writes serde rows; the header is emitted even for an empty table.
fn write_rows<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = T>,
) -> Result<()> {
    create_parent(path)?;
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    out.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        out.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}
