pub mod pipeline;
pub mod report;
pub mod simulate;

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use evib_core::empirical::EmpiricalSpeedModel;
use evib_core::io::{
    find_trials, load_trial, read_fits_csv, read_frf_points_csv, read_json, read_waveform,
    write_correlations_csv, write_frf_points_csv, write_json, write_waveform,
};
use evib_core::plant::{FrictionLaw, NoiseSpec, PlantConfig};
use evib_core::preprocess::FrfPointSet;
use evib_core::render::{
    inverse_filter, mismatch_error_db, render_voltage, verify_render, SpectralMatchReport,
};
use evib_core::signal::SAMPLE_RATE;
use evib_core::sysid::{
    correct_skin, fit_first_order, fit_second_order, fit_setup_lateral, fit_setup_normal,
    remove_setup, DEFAULT_BAND_MAX_HZ,
};
use evib_core::{Unit, Waveform};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    CompensateArgs, CorrelateArgs, ExtractArgs, IdentifyArgs, ModelArg, RegressArgs, TargetArgs,
    VerifyRenderArgs,
};
use crate::config::{load_config, load_setup, RenderSettings};
use crate::error::{CliError, CliResult};
use crate::pipeline::{correlate, extract_trial, regress};
use crate::plotdata::write_csv;

/// Trial directories named directly, plus those found under dataset roots.
fn collect_trials(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if simulate::is_trial_dir(input) {
            out.push(input.clone());
        } else if input.is_dir() {
            out.extend(find_trials(input)?);
        } else {
            return Err(CliError::data(format!(
                "{}: not a trial or dataset directory",
                input.display()
            )));
        }
    }
    Ok(out)
}

pub fn extract(args: &ExtractArgs) -> CliResult<()> {
    let dirs = collect_trials(&args.inputs)?;
    if dirs.is_empty() {
        return Err(CliError::data("no trials found"));
    }
    let extracted: Vec<_> = dirs
        .par_iter()
        .map(|d| -> CliResult<_> {
            let trial = load_trial(d)?;
            extract_trial(&trial).map_err(|e| CliError::data(format!("{}: {e}", d.display())))
        })
        .collect::<CliResult<_>>()?;
    let (mut friction, mut skin) = (Vec::new(), Vec::new());
    for p in extracted {
        friction.extend(p.friction);
        skin.extend(p.skin);
    }
    write_frf_points_csv(&args.out, &FrfPointSet::new(friction))?;
    if let Some(path) = &args.skin_out {
        write_frf_points_csv(path, &FrfPointSet::new(skin))?;
    }
    log::info!(
        "extracted {} trials into {}",
        dirs.len(),
        args.out.display()
    );
    Ok(())
}

pub fn identify(args: &IdentifyArgs) -> CliResult<()> {
    let points = read_frf_points_csv(&args.points)?;
    if points.is_empty() {
        return Err(CliError::data(format!(
            "{}: no points",
            args.points.display()
        )));
    }
    if points.conditions().len() > 1 {
        log::warn!(
            "points span {} conditions; fitting them together",
            points.conditions().len()
        );
    }
    let setup = if args.no_setup {
        None
    } else {
        Some(load_setup(args.setup.as_deref())?)
    };
    let band = args.band_max.unwrap_or(DEFAULT_BAND_MAX_HZ);
    if !(band > 0.0) {
        return Err(CliError::usage(format!(
            "band limit must be positive, got {band}"
        )));
    }
    let fit = match args.model {
        ModelArg::First => {
            let p = setup
                .as_ref()
                .map_or_else(|| points.clone(), |s| remove_setup(&points, s));
            fit_first_order(&p, band)?
        }
        ModelArg::Second => {
            let p = setup
                .as_ref()
                .map_or_else(|| points.clone(), |s| correct_skin(&points, s));
            fit_second_order(&p, band)?
        }
        ModelArg::SetupNormal => fit_setup_normal(&points)?,
        ModelArg::SetupLateral => fit_setup_lateral(&points)?,
    };
    write_json(&args.out, &fit)?;
    for flag in &fit.flags {
        log::warn!("fit flag: {flag:?}");
    }
    if !fit.converged {
        return Err(CliError::Convergence(format!(
            "fit did not converge (residual {:.3e}); result written to {}",
            fit.residual,
            args.out.display()
        )));
    }
    Ok(())
}

pub fn regress_cmd(args: &RegressArgs) -> CliResult<()> {
    let fits = read_fits_csv(&args.fits)?;
    let model = regress(&fits)?;
    write_json(&args.out, &model)?;
    println!(
        "K_bar = {:.6} N/V, cutoff = {:.3} Hz + {:.4} Hz per mm/s",
        model.k_bar, model.intercept_hz, model.slope_hz_per_mm_s
    );
    Ok(())
}

pub fn correlate_cmd(args: &CorrelateArgs) -> CliResult<()> {
    let fits = read_fits_csv(&args.fits)?;
    let rows = correlate(&fits);
    if rows.is_empty() {
        log::warn!("no pair had three cells with skin fits; writing an empty table");
    }
    write_correlations_csv(&args.out, &rows)?;
    Ok(())
}

/// Builds the target friction waveform from a file or from tones.
pub fn load_target(args: &TargetArgs) -> CliResult<Waveform> {
    if let Some(path) = &args.target {
        return Ok(read_waveform(path)?);
    }
    if args.tone.is_empty() {
        return Err(CliError::usage("give --target or at least one --tone"));
    }
    let len = (args.tone_duration * SAMPLE_RATE).round();
    if !(len >= 1.0) {
        return Err(CliError::usage("tone duration must be positive"));
    }
    let (tones, amp) = (args.tone.clone(), args.tone_amplitude);
    Ok(Waveform::from_fn(
        len as usize,
        SAMPLE_RATE,
        Unit::Newton,
        move |t| {
            tones
                .iter()
                .enumerate()
                .map(|(i, f)| amp * (TAU * f * t + 0.7 * i as f64).cos())
                .sum()
        },
    )?)
}

fn load_model(path: Option<&Path>) -> CliResult<EmpiricalSpeedModel> {
    let model: EmpiricalSpeedModel = match path {
        Some(p) => read_json(p)?,
        None => EmpiricalSpeedModel::published(),
    };
    model.validate()?;
    Ok(model)
}

fn load_render_settings(path: Option<&Path>) -> CliResult<RenderSettings> {
    let settings: RenderSettings = match path {
        Some(p) => load_config(p)?,
        None => RenderSettings::default(),
    };
    settings.render.validate()?;
    Ok(settings)
}

#[derive(Serialize)]
struct RenderReport {
    speed_mm_s: f64,
    cutoff_hz: f64,
    extrapolated: bool,
    ceiling_engaged: usize,
    saturation_fraction: f64,
    drive_peak_to_peak_v: f64,
    rate_hz: f64,
    samples: usize,
}

pub fn compensate(args: &CompensateArgs) -> CliResult<()> {
    let target = load_target(&args.target)?;
    let model = load_model(args.model.as_deref())?;
    let settings = load_render_settings(args.config.as_deref())?;
    let inverse = inverse_filter(&target, args.speed, &model, &settings.render)?;
    let rendered = render_voltage(&inverse.message, &settings.render)?;
    write_waveform(
        &args.out.join("drive_voltage"),
        &rendered.voltage,
        args.format.into(),
    )?;
    let report = RenderReport {
        speed_mm_s: args.speed,
        cutoff_hz: model.cutoff_hz(args.speed),
        extrapolated: inverse.extrapolated,
        ceiling_engaged: inverse.ceiling_engaged,
        saturation_fraction: rendered.saturation_fraction,
        drive_peak_to_peak_v: rendered.voltage.peak_to_peak(),
        rate_hz: rendered.voltage.rate(),
        samples: rendered.voltage.len(),
    };
    write_json(&args.out.join("render_report.json"), &report)?;
    if rendered.saturation_fraction > 0.0 {
        log::warn!(
            "{:.2}% of drive samples clipped at the voltage limit",
            100.0 * rendered.saturation_fraction
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct MatchReport<'a> {
    design_speed_mm_s: f64,
    run_speed_mm_s: f64,
    #[serde(flatten)]
    report: &'a SpectralMatchReport,
}

#[derive(Serialize)]
struct BandRow {
    center_hz: f64,
    lo_hz: f64,
    hi_hz: f64,
    error_db: f64,
    predicted_db: f64,
}

pub fn verify_render_cmd(args: &VerifyRenderArgs) -> CliResult<()> {
    let target = load_target(&args.target)?;
    let model = load_model(args.model.as_deref())?;
    let settings = load_render_settings(args.config.as_deref())?;
    let run_speed = args.run_speed.unwrap_or(args.speed);
    let plant = settings.plant.unwrap_or(PlantConfig {
        friction: FrictionLaw::Empirical(model),
        noise: NoiseSpec::Off,
        ..PlantConfig::default()
    });
    let report = verify_render(
        &target,
        &model,
        args.speed,
        &plant,
        run_speed,
        &settings.render,
    )?;
    write_json(
        &args.out.join("match_report.json"),
        &MatchReport {
            design_speed_mm_s: args.speed,
            run_speed_mm_s: run_speed,
            report: &report,
        },
    )?;
    let rows = report.bands.iter().map(|b| BandRow {
        center_hz: b.center_hz,
        lo_hz: b.lo_hz,
        hi_hz: b.hi_hz,
        error_db: b.error_db,
        predicted_db: mismatch_error_db(&model, b.center_hz, args.speed, run_speed),
    });
    write_csv(
        &args.out.join("third_octave_error.csv"),
        &["center_hz", "lo_hz", "hi_hz", "error_db", "predicted_db"],
        rows,
    )?;
    println!(
        "worst-case band error {:.3} dB over {} bands",
        report.worst_case_db,
        report.bands.len()
    );
    Ok(())
}
