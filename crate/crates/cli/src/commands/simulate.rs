use std::path::Path;

use evib_core::io::{grid_dir, save_trial, WaveformFormat};
use evib_core::plant::{simulate_trial, TrialRecord};
use rayon::prelude::*;

use crate::args::SimulateArgs;
use crate::config::{load_config, resolve_seed, SimulateConfig};
use crate::error::{CliError, CliResult};

/// Seed of the `index`-th trial of a dataset: distinct per trial, fixed by
/// the dataset seed.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One grid cell of the configured dataset.
pub fn simulate_cell(
    cfg: &SimulateConfig,
    participant: u32,
    speed: f64,
    force: f64,
    freq: f64,
    seed: u64,
) -> CliResult<TrialRecord> {
    let mut plant = cfg.plant;
    if let Some(generator) = &cfg.participants {
        plant.skin = generator.skin_at(speed, participant)?;
    }
    let proto = cfg.protocol.protocol(freq, speed, force);
    let mut trial = simulate_trial(&plant, &proto, seed)?;
    trial.meta.participant = participant;
    Ok(trial)
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg: SimulateConfig = match &args.config {
        Some(p) => load_config(p)?,
        None => SimulateConfig::default(),
    };
    cfg.seed = resolve_seed(args.seed, cfg.seed)?;
    if let Some(f) = args.format {
        cfg.format = f.into();
    }
    cfg.plant.validate()?;
    if !args.grid {
        let participant = cfg.grid.participants.first().copied().unwrap_or(1);
        let trial = simulate_cell(
            &cfg,
            participant,
            args.speed,
            args.force,
            args.freq,
            cfg.seed,
        )?;
        save_trial(&args.out, &trial, cfg.format)?;
        log::info!("wrote one trial to {}", args.out.display());
        return Ok(());
    }
    if cfg.grid.is_empty() {
        return Err(CliError::usage("the simulation grid is empty"));
    }
    let cells = grid_cells(&cfg);
    cells
        .par_iter()
        .enumerate()
        .try_for_each(|(index, &(p, v, f, freq))| -> CliResult<()> {
            let trial = simulate_cell(&cfg, p, v, f, freq, trial_seed(cfg.seed, index))?;
            save_trial(&grid_dir(&args.out, p, v, f, freq), &trial, cfg.format)?;
            Ok(())
        })?;
    evib_core::io::write_json(&args.out.join("dataset.json"), &cfg)?;
    log::info!("wrote {} trials to {}", cells.len(), args.out.display());
    Ok(())
}

/// Grid cells in a fixed order: participant, speed, force, frequency.
pub fn grid_cells(cfg: &SimulateConfig) -> Vec<(u32, f64, f64, f64)> {
    let g = &cfg.grid;
    let mut out = Vec::with_capacity(g.len());
    for &p in &g.participants {
        for &v in &g.speeds_mm_s {
            for &f in &g.forces_n {
                for &freq in &g.frequencies_hz {
                    out.push((p, v, f, freq));
                }
            }
        }
    }
    out
}

impl From<crate::args::FormatArg> for WaveformFormat {
    fn from(f: crate::args::FormatArg) -> Self {
        match f {
            crate::args::FormatArg::Binary => WaveformFormat::Binary,
            crate::args::FormatArg::Csv => WaveformFormat::Csv,
        }
    }
}

/// True when `dir` holds a trial rather than a dataset.
pub fn is_trial_dir(dir: &Path) -> bool {
    dir.join("meta.json").is_file()
}
