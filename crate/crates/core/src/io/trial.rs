use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::waveform::{csv_error, read_waveform, write_waveform, WaveformFormat};
use crate::io::{create_parent, read_json, write_json};
use crate::plant::{PositionTrace, TrialMeta, TrialRecord, TRIAL_FORMAT_VERSION};
use crate::signal::Waveform;

const CHANNELS: [&str; 7] = [
    "voltage",
    "force_x",
    "force_y",
    "force_normal",
    "accel_x",
    "accel_y",
    "accel_z",
];

#[derive(Serialize, Deserialize)]
struct PositionRow {
    time_s: f64,
    position_mm: f64,
}

/// Directory of one trial inside the dataset grid,
/// `P<participant>/v<speed>/f<force>/freq<hz>`.
pub fn grid_dir(
    root: &Path,
    participant: u32,
    speed_mm_s: f64,
    force_n: f64,
    freq_hz: f64,
) -> PathBuf {
    root.join(format!("P{participant}"))
        .join(format!("v{speed_mm_s}"))
        .join(format!("f{force_n}"))
        .join(format!("freq{freq_hz}"))
}

/// Writes every channel, `position.csv` and `meta.json` into `dir`.
pub fn save_trial(dir: &Path, trial: &TrialRecord, format: WaveformFormat) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, w) in trial.channels() {
        write_waveform(&dir.join(name), w, format)?;
    }
    write_position(&dir.join("position.csv"), &trial.position)?;
    write_json(&dir.join("meta.json"), &trial.meta)
}

pub fn load_trial(dir: &Path) -> Result<TrialRecord> {
    let meta: TrialMeta = read_json(&dir.join("meta.json"))?;
    if meta.format_version != TRIAL_FORMAT_VERSION {
        return Err(Error::format(
            dir.join("meta.json"),
            format!(
                "format version {} is not supported (expected {TRIAL_FORMAT_VERSION})",
                meta.format_version
            ),
        ));
    }
    let mut channels: Vec<Waveform> = Vec::with_capacity(CHANNELS.len());
    for name in CHANNELS {
        channels.push(read_waveform(&channel_file(dir, name)?)?);
    }
    let position = read_position(&dir.join("position.csv"))?;
    let mut it = channels.into_iter();
    let mut next = || it.next().expect("seven channels");
    let trial = TrialRecord {
        voltage: next(),
        force_x: next(),
        force_y: next(),
        force_normal: next(),
        accel_x: next(),
        accel_y: next(),
        accel_z: next(),
        position,
        meta,
    };
    trial
        .validate()
        .map_err(|e| Error::format(dir, e.to_string()))?;
    Ok(trial)
}

/// Every directory under `root` holding a `meta.json`, in path order.
pub fn find_trials(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            match e.into_io_error() {
                Some(io) => Error::io(path, io),
                None => Error::format(path, "filesystem loop"),
            }
        })?;
        if entry.file_type().is_file() && entry.file_name() == "meta.json" {
            if let Some(parent) = entry.path().parent() {
                out.push(parent.to_path_buf());
            }
        }
    }
    Ok(out)
}

fn channel_file(dir: &Path, name: &str) -> Result<PathBuf> {
    [WaveformFormat::Binary, WaveformFormat::Csv]
        .iter()
        .map(|f| dir.join(name).with_extension(f.extension()))
        .find(|p| p.is_file())
        .ok_or_else(|| Error::format(dir, format!("channel {name} is missing")))
}

fn write_position(path: &Path, trace: &PositionTrace) -> Result<()> {
    create_parent(path)?;
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for (&time_s, &position_mm) in trace.times_s.iter().zip(&trace.mm) {
        out.serialize(PositionRow {
            time_s,
            position_mm,
        })
        .map_err(|e| csv_error(path, e))?;
    }
    if trace.is_empty() {
        out.write_record(["time_s", "position_mm"])
            .map_err(|e| csv_error(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_position(path: &Path) -> Result<PositionTrace> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let (mut times, mut mm) = (Vec::new(), Vec::new());
    for row in reader.deserialize::<PositionRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        times.push(row.time_s);
        mm.push(row.position_mm);
    }
    PositionTrace::new(times, mm).map_err(|e| Error::format(path, e.to_string()))
}
