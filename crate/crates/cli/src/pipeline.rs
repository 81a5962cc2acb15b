//! Dataset-level orchestration: per-trial extraction, per-cell fits,
//! regression and correlation.

use std::path::{Path, PathBuf};

use evib_core::empirical::{
    build_empirical_model, pearson, EmpiricalSpeedModel, Parameter, Validity,
};
use evib_core::io::{CellFit, CorrelationRow, CORRELATION_PAIRS};
use evib_core::plant::{PlantConfig, SetupModel, TrialRecord};
use evib_core::preprocess::{analyze_trial, Condition, FrfPoint, FrfPointSet};
use evib_core::sysid::{
    correct_skin, fit_first_order, fit_second_order, remove_setup, FitResult, FittedModel,
};
use evib_core::{Error, Result};
use rayon::prelude::*;

/// Response points extracted from one trial.
#[derive(Clone, Debug)]
pub struct TrialPoints {
    pub friction: Vec<FrfPoint>,
    pub skin: Vec<FrfPoint>,
}

/// Friction (force over voltage) and skin (velocity over force) points of
/// every usable sweep.
pub fn extract_trial(trial: &TrialRecord) -> Result<TrialPoints> {
    let analysis = analyze_trial(trial)?;
    if analysis.friction.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no usable left-to-right sweep among {} detected",
            analysis.sweeps.len()
        )));
    }
    Ok(TrialPoints {
        friction: analysis.friction,
        skin: analysis.skin,
    })
}

/// Fits of one (participant, speed, force) cell.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub row: CellFit,
    pub friction: FitResult,
    pub skin: Option<FitResult>,
}

/// Removes the rig dynamics and fits the friction and skin models of one
/// cell. A failed skin fit leaves the skin columns empty; a failed friction
/// fit fails the cell.
pub fn fit_cell(
    condition: Condition,
    friction: &FrfPointSet,
    skin: Option<&FrfPointSet>,
    setup: Option<&SetupModel>,
    band_max_hz: f64,
) -> Result<CellOutcome> {
    let friction_points = match setup {
        Some(s) => remove_setup(friction, s),
        None => friction.clone(),
    };
    let friction_fit = fit_first_order(&friction_points, band_max_hz)?;
    let FittedModel::FirstOrder(f) = friction_fit.model else {
        unreachable!("first-order fit returns a first-order model")
    };
    let skin_fit = skin.and_then(|points| {
        let corrected = match setup {
            Some(s) => correct_skin(points, s),
            None => points.clone(),
        };
        match fit_second_order(&corrected, band_max_hz) {
            Ok(fit) => Some(fit),
            Err(e) => {
                log::warn!("skin fit failed for {condition:?}: {e}");
                None
            }
        }
    });
    let skin_model = skin_fit.as_ref().map(|fit| match fit.model {
        FittedModel::Skin(m) => m,
        _ => unreachable!("second-order fit returns a skin model"),
    });
    let row = CellFit {
        participant: condition.participant,
        speed_mm_s: condition.speed_mm_s,
        force_n: condition.force_n,
        k_n_per_v: f.k,
        cutoff_hz: f.cutoff_hz(),
        friction_residual: friction_fit.residual,
        friction_converged: friction_fit.converged,
        mass_kg: skin_model.map(|m| m.m),
        damping_ns_per_m: skin_model.map(|m| m.b),
        stiffness_n_per_m: skin_model.map(|m| m.k),
        skin_residual: skin_fit.as_ref().map(|f| f.residual),
        skin_converged: skin_fit.as_ref().map(|f| f.converged),
    };
    Ok(CellOutcome {
        row,
        friction: friction_fit,
        skin: skin_fit,
    })
}

/// Fits every condition present in `friction`, in parallel.
pub fn fit_all_cells(
    friction: &FrfPointSet,
    skin: Option<&FrfPointSet>,
    setup: Option<&SetupModel>,
    band_max_hz: f64,
) -> Vec<(Condition, Result<CellOutcome>)> {
    friction
        .conditions()
        .into_par_iter()
        .map(|c| {
            let f = FrfPointSet::new(friction.for_condition(&c));
            let s = skin.map(|s| FrfPointSet::new(s.for_condition(&c)));
            (c, fit_cell(c, &f, s.as_ref(), setup, band_max_hz))
        })
        .collect()
}

/// Speed law from the converged cells. The validity range is the span of
/// speeds and forces actually present.
pub fn regress(fits: &[CellFit]) -> Result<EmpiricalSpeedModel> {
    let usable: Vec<&CellFit> = fits.iter().filter(|f| f.friction_converged).collect();
    let k: Vec<_> = usable
        .iter()
        .filter_map(|f| f.sample(Parameter::K))
        .collect();
    let w: Vec<_> = usable
        .iter()
        .filter_map(|f| f.sample(Parameter::CutoffHz))
        .collect();
    let mut model = build_empirical_model(&k, &w)?;
    let span = |xs: Vec<f64>| {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        [lo, hi]
    };
    model.validity = Validity {
        speed_mm_s: span(usable.iter().map(|f| f.speed_mm_s).collect()),
        force_n: span(usable.iter().map(|f| f.force_n).collect()),
        ..Validity::default()
    };
    Ok(model)
}

/// The six friction-against-skin correlations, pooled over all cells with
/// both values. Pairs with fewer than three cells are left out.
pub fn correlate(fits: &[CellFit]) -> Vec<CorrelationRow> {
    let mut rows = Vec::new();
    for (x, y) in CORRELATION_PAIRS {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fits
            .iter()
            .filter(|f| f.friction_converged && f.skin_converged == Some(true))
            .filter_map(|f| Some((f.value(x)?, f.value(y)?)))
            .unzip();
        match pearson(&xs, &ys) {
            Ok(c) => rows.push(CorrelationRow::new(x, y, c)),
            Err(e) => log::warn!("{}-{} correlation skipped: {e}", x.label(), y.label()),
        }
    }
    rows
}

/// Ground truth recorded in simulated trials, when every trial agrees on
/// the friction law.
pub fn common_truth(truths: &[Option<PlantConfig>]) -> Option<PlantConfig> {
    let first = truths.first().copied().flatten()?;
    truths
        .iter()
        .all(|t| t.map(|t| t.friction) == Some(first.friction))
        .then_some(first)
}

/// A trial that could not be used, with the reason.
#[derive(Clone, Debug)]
pub struct TrialFailure {
    pub dir: PathBuf,
    pub reason: String,
}

impl TrialFailure {
    pub fn new(dir: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            dir: dir.to_path_buf(),
            reason: e.to_string(),
        }
    }
}
