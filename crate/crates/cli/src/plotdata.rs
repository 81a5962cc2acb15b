//! Data behind the figures: Bode point clouds as CSV and a bare SVG
//! scatter, and quartile tables for box plots. No images are rendered
//! beyond the SVG.

use std::fmt::Write as _;
use std::path::Path;

use evib_core::empirical::Parameter;
use evib_core::io::CellFit;
use evib_core::preprocess::FrfPointSet;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct BodeRow {
    freq_hz: f64,
    magnitude: f64,
    phase_rad: f64,
    sweep: usize,
    speed_mm_s: f64,
    force_n: f64,
    participant: u32,
}

pub fn write_bode_csv(path: &Path, points: &FrfPointSet) -> CliResult<()> {
    let rows = points.entries.iter().map(|p| BodeRow {
        freq_hz: p.freq_hz,
        magnitude: p.response.norm(),
        phase_rad: p.response.arg(),
        sweep: p.sweep,
        speed_mm_s: p.condition.speed_mm_s,
        force_n: p.condition.force_n,
        participant: p.condition.participant,
    });
    write_csv(
        path,
        &[
            "freq_hz",
            "magnitude",
            "phase_rad",
            "sweep",
            "speed_mm_s",
            "force_n",
            "participant",
        ],
        rows,
    )
}

const PALETTE: [&str; 6] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
];

/// Magnitude (dB) and phase (degrees) against log frequency, one colour per
/// speed.
pub fn bode_svg(points: &FrfPointSet, title: &str) -> String {
    let (w, h, margin) = (640.0, 480.0, 50.0);
    let panel_h = (h - 3.0 * margin) / 2.0;
    let usable: Vec<_> = points
        .entries
        .iter()
        .filter(|p| p.freq_hz > 0.0 && p.response.norm() > 0.0)
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    if usable.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let lf: Vec<f64> = usable.iter().map(|p| p.freq_hz.log10()).collect();
    let db: Vec<f64> = usable
        .iter()
        .map(|p| 20.0 * p.response.norm().log10())
        .collect();
    let deg: Vec<f64> = usable
        .iter()
        .map(|p| p.response.arg().to_degrees())
        .collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (f0, f1) = range(&lf);
    let mut speeds: Vec<f64> = usable.iter().map(|p| p.condition.speed_mm_s).collect();
    speeds.sort_by(f64::total_cmp);
    speeds.dedup();
    let x = |v: f64| margin + (v - f0) / (f1 - f0) * (w - 2.0 * margin);
    for (panel, values, label) in [(0, &db, "magnitude (dB)"), (1, &deg, "phase (deg)")] {
        let top = margin + panel as f64 * (panel_h + margin);
        let (v0, v1) = range(values);
        let y = |v: f64| top + panel_h - (v - v0) / (v1 - v0) * panel_h;
        let _ = writeln!(
            svg,
            r#"<rect x="{margin}" y="{top}" width="{}" height="{panel_h}" fill="none" stroke="black"/>"#,
            w - 2.0 * margin
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{label} [{v0:.1}, {v1:.1}]</text>"#,
            margin + 4.0,
            top + 12.0
        );
        for (i, p) in usable.iter().enumerate() {
            let colour = speeds
                .iter()
                .position(|&s| s == p.condition.speed_mm_s)
                .map_or(PALETTE[0], |k| PALETTE[k % PALETTE.len()]);
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{colour}"/>"#,
                x(lf[i]),
                y(values[i])
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">frequency (Hz, log) [{:.0}, {:.0}]</text>"#,
        w / 2.0,
        h - 10.0,
        10f64.powf(f0),
        10f64.powf(f1)
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Five-number summary of one box in a box plot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuartileRow {
    pub parameter: &'static str,
    /// `speed` or `force`.
    pub factor: &'static str,
    pub level: f64,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics (the
/// `(n − 1)·q` rule). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

const BOX_PARAMETERS: [Parameter; 5] = [
    Parameter::K,
    Parameter::CutoffHz,
    Parameter::Mass,
    Parameter::Damping,
    Parameter::Stiffness,
];

/// Box-plot summaries of every parameter, grouped by speed and by force.
pub fn quartile_table(fits: &[CellFit]) -> Vec<QuartileRow> {
    let mut rows = Vec::new();
    for parameter in BOX_PARAMETERS {
        for (factor, level_of) in [
            ("speed", (|f: &CellFit| f.speed_mm_s) as fn(&CellFit) -> f64),
            ("force", |f: &CellFit| f.force_n),
        ] {
            let mut levels: Vec<f64> = fits.iter().map(level_of).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            for level in levels {
                let mut values: Vec<f64> = fits
                    .iter()
                    .filter(|f| f.friction_converged && level_of(f) == level)
                    .filter_map(|f| f.value(parameter))
                    .collect();
                if values.is_empty() {
                    continue;
                }
                values.sort_by(f64::total_cmp);
                rows.push(QuartileRow {
                    parameter: parameter.label(),
                    factor,
                    level,
                    n: values.len(),
                    min: values[0],
                    q1: quantile(&values, 0.25),
                    median: quantile(&values, 0.5),
                    q3: quantile(&values, 0.75),
                    max: values[values.len() - 1],
                });
            }
        }
    }
    rows
}

pub const QUARTILE_COLUMNS: [&str; 9] = [
    "parameter",
    "factor",
    "level",
    "n",
    "min",
    "q1",
    "median",
    "q3",
    "max",
];

pub fn write_quartiles_csv(path: &Path, rows: &[QuartileRow]) -> CliResult<()> {
    write_csv(path, &QUARTILE_COLUMNS, rows.iter().cloned())
}

/// Serde rows under an explicit header, which is written even when there
/// are no rows.
pub fn write_csv<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = T>,
) -> CliResult<()> {
    let fail = |e: &dyn std::fmt::Display| CliError::data(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    }
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| fail(&e))?;
    out.write_record(header).map_err(|e| fail(&e))?;
    for row in rows {
        out.serialize(row).map_err(|e| fail(&e))?;
    }
    out.flush().map_err(|e| fail(&e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn empty_point_set_still_gives_valid_svg() {
        let svg = bode_svg(&FrfPointSet::default(), "a < b");
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
    }
}
