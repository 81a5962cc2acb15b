//! Versioned JSON configuration files. Unknown fields are rejected so a
//! typo fails loudly instead of silently falling back to a default.

use std::path::{Path, PathBuf};

use evib_core::io::WaveformFormat;
use evib_core::plant::{ParticipantGenerator, PlantConfig, SetupModel, TrialProtocol};
use evib_core::render::RenderConfig;
use evib_core::signal::protocol_frequencies;
use evib_core::sysid::DEFAULT_BAND_MAX_HZ;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "EVIB_SEED";

/// The rig models shipped as the default `setup.json`.
pub const BASELINE_SETUP_JSON: &str = include_str!("../assets/setup.json");

pub fn baseline_setup() -> SetupModel {
    serde_json::from_str(BASELINE_SETUP_JSON).expect("shipped setup.json parses")
}

pub fn load_setup(path: Option<&Path>) -> CliResult<SetupModel> {
    let setup = match path {
        None => baseline_setup(),
        Some(p) => evib_core::io::read_json(p)?,
    };
    setup.validate()?;
    Ok(setup)
}

/// Reads a config file and checks its version.
pub fn load_config<T: DeserializeOwned + Versioned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if cfg.version() != CONFIG_VERSION {
        return Err(CliError::usage(format!(
            "{}: config version {} is not supported (expected {CONFIG_VERSION})",
            path.display(),
            cfg.version()
        )));
    }
    Ok(cfg)
}

pub trait Versioned {
    fn version(&self) -> u32;
}

/// Seed precedence: command-line flag, then `EVIB_SEED`, then the config.
pub fn resolve_seed(flag: Option<u64>, configured: u64) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(configured),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub participants: Vec<u32>,
    pub speeds_mm_s: Vec<f64>,
    pub forces_n: Vec<f64>,
    pub frequencies_hz: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            participants: vec![1],
            speeds_mm_s: vec![20.0, 40.0, 60.0, 80.0, 100.0],
            forces_n: vec![0.2, 0.3, 0.4, 0.5, 0.6],
            frequencies_hz: protocol_frequencies(),
        }
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.participants.len()
            * self.speeds_mm_s.len()
            * self.forces_n.len()
            * self.frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Protocol settings shared by every trial of a simulated dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSettings {
    pub carrier_hz: f64,
    pub amplitude_vpp: f64,
    pub duration_s: f64,
    pub sweeps: usize,
    pub rate_hz: f64,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        let p = TrialProtocol::new(100.0, 60.0, 0.4);
        Self {
            carrier_hz: p.carrier_hz,
            amplitude_vpp: p.amplitude_vpp,
            duration_s: p.duration_s,
            sweeps: p.sweeps,
            rate_hz: p.rate_hz,
        }
    }
}

impl ProtocolSettings {
    pub fn protocol(&self, freq: f64, speed: f64, force: f64) -> TrialProtocol {
        TrialProtocol {
            carrier_hz: self.carrier_hz,
            amplitude_vpp: self.amplitude_vpp,
            duration_s: self.duration_s,
            sweeps: self.sweeps,
            rate_hz: self.rate_hz,
            ..TrialProtocol::new(freq, speed, force)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub protocol: ProtocolSettings,
    /// When present, the skin model of each trial comes from this
    /// generator instead of `plant.skin`.
    #[serde(default)]
    pub participants: Option<ParticipantGenerator>,
    #[serde(default)]
    pub format: WaveformFormat,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            plant: PlantConfig::default(),
            grid: Grid::default(),
            protocol: ProtocolSettings::default(),
            participants: None,
            format: WaveformFormat::Binary,
        }
    }
}

impl Versioned for SimulateConfig {
    fn version(&self) -> u32 {
        self.version
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Rig model file; the shipped baseline when absent.
    #[serde(default)]
    pub setup: Option<PathBuf>,
    #[serde(default = "default_band")]
    pub band_max_hz: f64,
    #[serde(default = "default_true")]
    pub fit_skin: bool,
    /// Largest tolerated fraction of unusable trials.
    #[serde(default = "default_failure_fraction")]
    pub max_failure_fraction: f64,
}

fn default_band() -> f64 {
    DEFAULT_BAND_MAX_HZ
}
fn default_true() -> bool {
    true
}
fn default_failure_fraction() -> f64 {
    0.1
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            dataset: None,
            out: None,
            setup: None,
            band_max_hz: default_band(),
            fit_skin: true,
            max_failure_fraction: default_failure_fraction(),
        }
    }
}

impl Versioned for PipelineConfig {
    fn version(&self) -> u32 {
        self.version
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSettings {
    pub version: u32,
    #[serde(default)]
    pub render: RenderConfig,
    /// Plant used by `verify-render`; a noise-free plant following the
    /// design model when absent.
    #[serde(default)]
    pub plant: Option<PlantConfig>,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            render: RenderConfig::default(),
            plant: None,
        }
    }
}

impl Versioned for RenderSettings {
    fn version(&self) -> u32 {
        self.version
    }
}
