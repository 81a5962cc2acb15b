use std::path::{Path, PathBuf};

use evib_core::io::{
    find_trials, load_trial, write_correlations_csv, write_fits_csv, write_frf_points_csv,
    write_json, CellFit,
};
use evib_core::plant::PlantConfig;
use evib_core::preprocess::{FrfPoint, FrfPointSet};
use evib_core::sysid::{correct_skin, remove_setup};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::PipelineArgs;
use crate::config::{load_config, load_setup, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::pipeline::{
    common_truth, correlate, extract_trial, fit_all_cells, regress, TrialFailure,
};
use crate::plotdata::{
    bode_svg, quartile_table, write_bode_csv, write_csv, write_quartiles_csv, write_text,
};

/// Files every complete pipeline run leaves in its output directory.
pub const REQUIRED_OUTPUTS: [&str; 3] = ["fits.csv", "empirical_model.json", "correlations.csv"];

#[derive(Serialize)]
struct FailureRow<'a> {
    trial: &'a str,
    reason: &'a str,
}

#[derive(Serialize)]
struct CellFitRecord<'a> {
    participant: u32,
    speed_mm_s: f64,
    force_n: f64,
    friction: &'a evib_core::sysid::FitResult,
    skin: Option<&'a evib_core::sysid::FitResult>,
}

/// Pipeline settings after merging the config file and flags.
fn settings(args: &PipelineArgs) -> CliResult<(PipelineConfig, PathBuf, PathBuf)> {
    let mut cfg: PipelineConfig = match &args.config {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = &args.setup {
        cfg.setup = Some(s.clone());
    }
    if let Some(b) = args.band_max {
        cfg.band_max_hz = b;
    }
    if args.no_skin {
        cfg.fit_skin = false;
    }
    let dataset = args
        .dataset
        .clone()
        .or_else(|| cfg.dataset.clone())
        .ok_or_else(|| CliError::usage("no dataset given"))?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::usage("no output directory given (--out)"))?;
    if !(cfg.band_max_hz > 0.0) || !(0.0..=1.0).contains(&cfg.max_failure_fraction) {
        return Err(CliError::usage(
            "band_max_hz must be positive and max_failure_fraction in [0, 1]",
        ));
    }
    if !dataset.is_dir() {
        return Err(CliError::data(format!(
            "{}: dataset directory not found",
            dataset.display()
        )));
    }
    if let Some(s) = &cfg.setup {
        if !s.is_file() {
            return Err(CliError::usage(format!(
                "{}: setup file not found",
                s.display()
            )));
        }
    }
    Ok((cfg, dataset, out))
}

fn relative(path: &Path, root: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .display()
        .to_string()
}

pub fn run(args: &PipelineArgs) -> CliResult<()> {
    let (cfg, dataset, out) = settings(args)?;
    let setup = load_setup(cfg.setup.as_deref())?;
    let dirs = find_trials(&dataset)?;
    if dirs.is_empty() {
        return Err(CliError::data(format!(
            "{}: no trials found",
            dataset.display()
        )));
    }

    type Extracted = (Vec<FrfPoint>, Vec<FrfPoint>, Option<PlantConfig>);
    let results: Vec<Result<Extracted, TrialFailure>> = dirs
        .par_iter()
        .map(|d| {
            let trial = load_trial(d).map_err(|e| TrialFailure::new(d, e))?;
            let points = extract_trial(&trial).map_err(|e| TrialFailure::new(d, e))?;
            Ok((points.friction, points.skin, trial.meta.ground_truth))
        })
        .collect();

    let (mut friction, mut skin, mut truths, mut failures) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok((f, s, t)) => {
                friction.extend(f);
                skin.extend(s);
                truths.push(t);
            }
            Err(failure) => {
                log::warn!("skipping {}: {}", failure.dir.display(), failure.reason);
                failures.push(failure);
            }
        }
    }
    let failed_fraction = failures.len() as f64 / dirs.len() as f64;
    if failed_fraction > cfg.max_failure_fraction {
        return Err(CliError::data(format!(
            "{} of {} trials failed ({:.1}%, limit {:.1}%)",
            failures.len(),
            dirs.len(),
            100.0 * failed_fraction,
            100.0 * cfg.max_failure_fraction
        )));
    }

    let friction = FrfPointSet::new(friction);
    let skin = FrfPointSet::new(skin);
    let cells = fit_all_cells(
        &friction,
        cfg.fit_skin.then_some(&skin),
        Some(&setup),
        cfg.band_max_hz,
    );
    let mut fits: Vec<CellFit> = Vec::new();
    let mut records = Vec::new();
    for (condition, outcome) in &cells {
        match outcome {
            Ok(o) => {
                fits.push(o.row);
                records.push(CellFitRecord {
                    participant: condition.participant,
                    speed_mm_s: condition.speed_mm_s,
                    force_n: condition.force_n,
                    friction: &o.friction,
                    skin: o.skin.as_ref(),
                });
            }
            Err(e) => log::warn!("cell {condition:?} could not be fitted: {e}"),
        }
    }
    if fits.is_empty() {
        return Err(CliError::data("no cell could be fitted"));
    }
    if fits.iter().all(|f| !f.friction_converged) {
        return Err(CliError::Convergence("no friction fit converged".into()));
    }

    write_frf_points_csv(&out.join("frf_points.csv"), &friction)?;
    if cfg.fit_skin {
        write_frf_points_csv(&out.join("skin_points.csv"), &skin)?;
    }
    write_fits_csv(&out.join("fits.csv"), &fits)?;
    write_json(&out.join("cell_fits.json"), &records)?;
    match regress(&fits) {
        Ok(model) => write_json(&out.join("empirical_model.json"), &model)?,
        Err(e) => {
            log::warn!("empirical model not built: {e}");
            remove_stale(&out.join("empirical_model.json"))?;
        }
    }
    write_correlations_csv(&out.join("correlations.csv"), &correlate(&fits))?;
    match common_truth(&truths) {
        Some(truth) => write_json(&out.join("truth.json"), &truth)?,
        None => remove_stale(&out.join("truth.json"))?,
    }
    let failure_rows: Vec<(String, String)> = failures
        .iter()
        .map(|f| (relative(&f.dir, &dataset), f.reason.clone()))
        .collect();
    write_csv(
        &out.join("failures.csv"),
        &["trial", "reason"],
        failure_rows.iter().map(|(t, r)| FailureRow {
            trial: t,
            reason: r,
        }),
    )?;

    let plot = out.join("plotdata");
    let corrected_friction = remove_setup(&friction, &setup);
    write_bode_csv(&plot.join("bode_friction.csv"), &corrected_friction)?;
    write_text(
        &plot.join("bode_friction.svg"),
        &bode_svg(&corrected_friction, "friction response (N/V)"),
    )?;
    if cfg.fit_skin {
        let corrected_skin = correct_skin(&skin, &setup);
        write_bode_csv(&plot.join("bode_skin.csv"), &corrected_skin)?;
        write_text(
            &plot.join("bode_skin.svg"),
            &bode_svg(&corrected_skin, "skin mobility (m/s/N)"),
        )?;
    }
    write_quartiles_csv(&plot.join("quartiles.csv"), &quartile_table(&fits))?;

    log::info!(
        "pipeline: {} trials used, {} skipped, {} cells fitted",
        dirs.len() - failures.len(),
        failures.len(),
        fits.len()
    );
    Ok(())
}

fn remove_stale(path: &Path) -> CliResult<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
            Err(CliError::data(format!("{}: {e}", path.display())))
        }
        _ => Ok(()),
    }
}
