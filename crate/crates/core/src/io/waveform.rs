use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::create_parent;
use crate::signal::{Unit, Waveform};

/// Storage form of a waveform file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveformFormat {
    /// Raw little-endian f64 samples (`.f64`) plus a JSON sidecar.
    #[default]
    Binary,
    /// `time_s,value,unit,rate_hz` rows.
    Csv,
}

impl WaveformFormat {
    pub fn extension(self) -> &'static str {
        match self {
            WaveformFormat::Binary => "f64",
            WaveformFormat::Csv => "csv",
        }
    }
}

impl std::str::FromStr for WaveformFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" | "f64" => Ok(WaveformFormat::Binary),
            "csv" => Ok(WaveformFormat::Csv),
            other => Err(Error::invalid(format!("unknown waveform format {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    rate_hz: f64,
    unit: Unit,
    length: usize,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    time_s: f64,
    value: f64,
    unit: Unit,
    rate_hz: f64,
}

fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

pub fn write_waveform_csv(path: &Path, w: &Waveform) -> Result<()> {
    create_parent(path)?;
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let rate = w.rate();
    for (i, &value) in w.samples().iter().enumerate() {
        out.serialize(CsvRow {
            time_s: i as f64 / rate,
            value,
            unit: w.unit(),
            rate_hz: rate,
        })
        .map_err(|e| csv_error(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_waveform_csv(path: &Path) -> Result<Waveform> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers != vec!["time_s", "value", "unit", "rate_hz"] {
        return Err(Error::format(
            path,
            format!("unexpected header {headers:?}"),
        ));
    }
    let mut samples = Vec::new();
    let mut meta: Option<(Unit, f64)> = None;
    for (line, row) in reader.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        match meta {
            None => meta = Some((row.unit, row.rate_hz)),
            Some((unit, rate)) if unit != row.unit || rate != row.rate_hz => {
                return Err(Error::format(
                    path,
                    format!("row {} changes unit or rate mid-file", line + 2),
                ));
            }
            Some(_) => {}
        }
        samples.push(row.value);
    }
    let (unit, rate) = meta.ok_or_else(|| Error::format(path, "no samples"))?;
    Waveform::new(samples, rate, unit).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes the samples to `path` and the sidecar next to it with a `.json`
/// extension.
pub fn write_waveform_bin(path: &Path, w: &Waveform) -> Result<()> {
    create_parent(path)?;
    let bytes: Vec<u8> = w.samples().iter().flat_map(|x| x.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = Sidecar {
        rate_hz: w.rate(),
        unit: w.unit(),
        length: w.len(),
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_waveform_bin(path: &Path) -> Result<Waveform> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: Sidecar =
        serde_json::from_str(&text).map_err(|e| Error::format(&side, e.to_string()))?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != sidecar.length * 8 {
        return Err(Error::format(
            path,
            format!(
                "{} bytes but sidecar declares {} samples",
                bytes.len(),
                sidecar.length
            ),
        ));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Waveform::new(samples, sidecar.rate_hz, sidecar.unit)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Writes `<stem>.<ext>` (plus the sidecar for binary) and returns the data path.
pub fn write_waveform(stem: &Path, w: &Waveform, format: WaveformFormat) -> Result<PathBuf> {
    let path = stem.with_extension(format.extension());
    match format {
        WaveformFormat::Binary => write_waveform_bin(&path, w)?,
        WaveformFormat::Csv => write_waveform_csv(&path, w)?,
    }
    Ok(path)
}

/// Reads a waveform, choosing the decoder from the file extension.
pub fn read_waveform(path: &Path) -> Result<Waveform> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_waveform_csv(path),
        Some("f64") | Some("bin") => read_waveform_bin(path),
        _ => Err(Error::format(path, "expected a .csv or .f64 waveform file")),
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}
