//! Golden files for every CSV and JSON schema. Each case builds its output
//! from fixed inputs; `UPDATE_GOLDEN=1` rewrites the stored copies.

use std::path::{Path, PathBuf};

use evib_cli::args::ReportFormat;
use evib_cli::commands::report;
use evib_cli::config::{SimulateConfig, BASELINE_SETUP_JSON};
use evib_cli::plotdata::{quartile_table, write_bode_csv, write_quartiles_csv};
use evib_core::empirical::{Correlation, EmpiricalSpeedModel, Parameter};
use evib_core::io::{
    write_correlations_csv, write_fits_csv, write_frf_points_csv, write_json, write_waveform_bin,
    write_waveform_csv, CellFit, CorrelationRow,
};
use evib_core::plant::{
    FirstOrderFrictionModel, PlantConfig, SetupModel, TrialMeta, TrialProtocol,
    TRIAL_FORMAT_VERSION,
};
use evib_core::preprocess::{Condition, FrfPoint, FrfPointSet};
use evib_core::sysid::{FitFlag, FitResult, FittedModel};
use evib_core::{Unit, Waveform};
use num_complex::Complex64;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn cell(
    participant: u32,
    speed: f64,
    force: f64,
    k: f64,
    cutoff: f64,
    skin: Option<[f64; 3]>,
) -> CellFit {
    CellFit {
        participant,
        speed_mm_s: speed,
        force_n: force,
        k_n_per_v: k,
        cutoff_hz: cutoff,
        friction_residual: 1.5e-4,
        friction_converged: true,
        mass_kg: skin.map(|s| s[0]),
        damping_ns_per_m: skin.map(|s| s[1]),
        stiffness_n_per_m: skin.map(|s| s[2]),
        skin_residual: skin.map(|_| 2.5e-3),
        skin_converged: skin.map(|_| true),
    }
}

pub fn sample_fits() -> Vec<CellFit> {
    vec![
        cell(1, 20.0, 0.2, 0.0121, 660.0, Some([0.0014, 1.25, 420.0])),
        cell(1, 20.0, 0.6, 0.0125, 664.0, Some([0.0015, 1.5, 430.0])),
        cell(1, 100.0, 0.2, 0.0122, 1760.0, Some([0.0042, 1.2, 760.0])),
        cell(1, 100.0, 0.6, 0.0124, 1770.0, None),
    ]
}

pub fn sample_points() -> FrfPointSet {
    let cond = |speed: f64| Condition {
        speed_mm_s: speed,
        force_n: 0.4,
        participant: 2,
    };
    FrfPointSet::new(vec![
        FrfPoint {
            freq_hz: 30.0,
            response: Complex64::new(0.0123, -0.0005),
            sweep: 1,
            condition: cond(60.0),
        },
        FrfPoint {
            freq_hz: 30.0,
            response: Complex64::new(0.0122, -0.0006),
            sweep: 2,
            condition: cond(60.0),
        },
        FrfPoint {
            freq_hz: 445.0,
            response: Complex64::new(0.0108, -0.0041),
            sweep: 1,
            condition: cond(60.0),
        },
        FrfPoint {
            freq_hz: 100.0,
            response: Complex64::new(0.011, -0.002),
            sweep: 3,
            condition: cond(20.0),
        },
    ])
}

fn sample_fit_result() -> FitResult {
    FitResult {
        model: FittedModel::FirstOrder(FirstOrderFrictionModel::from_hz(0.0123, 1214.34).unwrap()),
        residual: 3.5e-5,
        iterations: 42,
        converged: true,
        band_hz: [30.0, 600.0],
        points: 72,
        flags: vec![FitFlag::AtBound {
            parameter: "omega_o".into(),
        }],
    }
}

/// Writes each artifact into `dir` and returns `(golden name, produced path)`.
pub fn produce(dir: &Path) -> Vec<(&'static str, PathBuf)> {
    let mut out = Vec::new();
    let mut add = |name: &'static str| {
        let p = dir.join(name);
        out.push((name, p.clone()));
        p
    };

    let w = Waveform::new(vec![0.0, 0.125, -1.5e-3, 2.0], 20_000.0, Unit::Newton).unwrap();
    write_waveform_csv(&add("waveform.csv"), &w).unwrap();
    let bin = dir.join("waveform.f64");
    write_waveform_bin(&bin, &w).unwrap();
    std::fs::rename(bin.with_extension("json"), add("waveform_sidecar.json")).unwrap();

    write_frf_points_csv(&add("frf_points.csv"), &sample_points()).unwrap();
    write_bode_csv(&add("bode.csv"), &sample_points()).unwrap();
    write_fits_csv(&add("fits.csv"), &sample_fits()).unwrap();
    write_quartiles_csv(&add("quartiles.csv"), &quartile_table(&sample_fits())).unwrap();
    let corr = vec![
        CorrelationRow::new(
            Parameter::K,
            Parameter::Mass,
            Correlation {
                r: 0.25,
                p: 0.5,
                n: 25,
            },
        ),
        CorrelationRow::new(
            Parameter::CutoffHz,
            Parameter::Stiffness,
            Correlation {
                r: -0.75,
                p: 1.5e-5,
                n: 25,
            },
        ),
    ];
    write_correlations_csv(&add("correlations.csv"), &corr).unwrap();
    write_json(&add("empirical_model.json"), &EmpiricalSpeedModel::published()).unwrap();
    write_json(&add("fit.json"), &sample_fit_result()).unwrap();
    write_json(&add("setup.json"), &SetupModel::default()).unwrap();
    write_json(&add("simulate_config.json"), &SimulateConfig::default()).unwrap();
    let meta = TrialMeta {
        format_version: TRIAL_FORMAT_VERSION,
        protocol: TrialProtocol::new(245.0, 60.0, 0.4),
        participant: 1,
        seed: 7,
        ground_truth: Some(PlantConfig::default()),
    };
    write_json(&add("meta.json"), &meta).unwrap();

    let outputs = dir.join("pipeline_out");
    write_fits_csv(&outputs.join("fits.csv"), &sample_fits()).unwrap();
    write_correlations_csv(&outputs.join("correlations.csv"), &corr).unwrap();
    write_json(
        &outputs.join("empirical_model.json"),
        &EmpiricalSpeedModel {
            k_bar: 0.0124,
            ..EmpiricalSpeedModel::published()
        },
    )
    .unwrap();
    write_json(&outputs.join("truth.json"), &PlantConfig::default()).unwrap();
    std::fs::write(
        add("report.csv"),
        report::render(&outputs, ReportFormat::Csv).unwrap(),
    )
    .unwrap();
    out
}

/// Compares every produced artifact with its golden copy, or rewrites the
/// copies when `UPDATE_GOLDEN` is set. Returns the names that differ.
pub fn check_all() -> Vec<String> {
    let tmp = tempfile::tempdir().unwrap();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatched = Vec::new();
    for (name, produced) in produce(tmp.path()) {
        let golden = golden_dir().join(name);
        let actual = read(&produced);
        if update {
            std::fs::write(&golden, &actual).unwrap();
        } else if !golden.is_file() || read(&golden) != actual {
            mismatched.push(name.to_string());
        }
    }
    mismatched
}

/// The shipped rig file must stay identical to the golden one.
pub fn shipped_setup_matches() -> bool {
    BASELINE_SETUP_JSON == read(&golden_dir().join("setup.json"))
}
