use std::fmt::Write as _;
use std::path::Path;

use evib_core::empirical::EmpiricalSpeedModel;
use evib_core::io::{read_fits_csv, read_json};
use evib_core::plant::{FrictionLaw, PlantConfig};
use serde::Deserialize;

use crate::args::{ReportArgs, ReportFormat};
use crate::commands::pipeline::REQUIRED_OUTPUTS;
use crate::error::{CliError, CliResult};
use crate::plotdata::quartile_table;

/// Column header of `report --format csv`.
pub const REPORT_CSV_HEADER: &str = "quantity,recovered,configured,delta_percent";

#[derive(Deserialize)]
struct CorrelationLine {
    pair: String,
    r: f64,
    p: f64,
    n: usize,
}

/// Configured speed-law values `(K_bar, intercept, slope)` of a simulated
/// dataset.
fn configured(truth: &PlantConfig) -> [f64; 3] {
    match truth.friction {
        FrictionLaw::Empirical(m) => [m.k_bar, m.intercept_hz, m.slope_hz_per_mm_s],
        FrictionLaw::Fixed(f) => [f.k, f.cutoff_hz(), 0.0],
    }
}

fn delta_percent(recovered: f64, configured: f64) -> Option<f64> {
    (configured != 0.0).then(|| 100.0 * (recovered - configured) / configured)
}

pub fn missing_outputs(dir: &Path) -> Vec<&'static str> {
    REQUIRED_OUTPUTS
        .iter()
        .copied()
        .filter(|f| !dir.join(f).is_file())
        .collect()
}

/// The report as text or CSV.
pub fn render(dir: &Path, format: ReportFormat) -> CliResult<String> {
    let missing = missing_outputs(dir);
    if !missing.is_empty() {
        return Err(CliError::data(format!(
            "{}: missing pipeline outputs: {}",
            dir.display(),
            missing.join(", ")
        )));
    }
    let model: EmpiricalSpeedModel = read_json(&dir.join("empirical_model.json"))?;
    let truth: Option<PlantConfig> = match dir.join("truth.json") {
        p if p.is_file() => Some(read_json(&p)?),
        _ => None,
    };
    let recovered = [model.k_bar, model.intercept_hz, model.slope_hz_per_mm_s];
    let expected = truth.as_ref().map(configured);
    let names = ["K_bar", "intercept_hz", "slope_hz_per_mm_s"];

    if format == ReportFormat::Csv {
        let mut out = format!("{REPORT_CSV_HEADER}\n");
        for (i, name) in names.iter().enumerate() {
            let (c, d) = match expected {
                Some(e) => (
                    e[i].to_string(),
                    delta_percent(recovered[i], e[i]).map_or(String::new(), |d| format!("{d:.4}")),
                ),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{name},{},{c},{d}", recovered[i]);
        }
        return Ok(out);
    }

    let fits = read_fits_csv(&dir.join("fits.csv"))?;
    let mut reader = csv::Reader::from_path(dir.join("correlations.csv"))
        .map_err(|e| CliError::data(format!("correlations.csv: {e}")))?;
    let correlations: Vec<CorrelationLine> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::data(format!("correlations.csv: {e}")))?;

    let mut out = String::new();
    let converged = fits.iter().filter(|f| f.friction_converged).count();
    let _ = writeln!(out, "evib report: {}", dir.display());
    let _ = writeln!(out, "cells fitted: {} ({converged} converged)", fits.len());
    let _ = writeln!(out);
    let _ = writeln!(out, "empirical model");
    let _ = writeln!(
        out,
        "  {:<22}{:>14}{:>14}{:>11}",
        "quantity", "recovered", "configured", "delta"
    );
    let labels = ["K_bar (N/V)", "intercept (Hz)", "slope (Hz per mm/s)"];
    for (i, label) in labels.iter().enumerate() {
        let (c, d) = match expected {
            Some(e) => (
                format!("{:.6}", e[i]),
                delta_percent(recovered[i], e[i]).map_or("n/a".into(), |d| format!("{d:+.2}%")),
            ),
            None => ("n/a".into(), "n/a".into()),
        };
        let _ = writeln!(out, "  {label:<22}{:>14.6}{c:>14}{d:>11}", recovered[i]);
    }
    let v = &model.validity;
    let _ = writeln!(
        out,
        "  validity: speed [{}, {}] mm/s, force [{}, {}] N, {} Vpp",
        v.speed_mm_s[0], v.speed_mm_s[1], v.force_n[0], v.force_n[1], v.amplitude_vpp
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "correlations");
    if correlations.is_empty() {
        let _ = writeln!(out, "  none (skin fits missing)");
    }
    for c in &correlations {
        let _ = writeln!(
            out,
            "  {:<12} r = {:+.3}  p = {:.3e}  n = {}",
            c.pair, c.r, c.p, c.n
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "quartiles by speed");
    let _ = writeln!(
        out,
        "  {:<10}{:>8}{:>5}{:>14}{:>14}{:>14}",
        "parameter", "speed", "n", "q1", "median", "q3"
    );
    for q in quartile_table(&fits).iter().filter(|q| q.factor == "speed") {
        let _ = writeln!(
            out,
            "  {:<10}{:>8}{:>5}{:>14.6e}{:>14.6e}{:>14.6e}",
            q.parameter, q.level, q.n, q.q1, q.median, q.q3
        );
    }
    Ok(out)
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    if !args.outputs.is_dir() {
        return Err(CliError::data(format!(
            "{}: no such directory",
            args.outputs.display()
        )));
    }
    let text = render(&args.outputs, args.format)?;
    print!("{text}");
    Ok(())
}
