//! Ground-truth simulator of the drive → finger → rig → sensor chain.

use std::f64::consts::{PI, SQRT_2, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::empirical::EmpiricalSpeedModel;
use crate::error::{Error, Result};
use crate::lti::{apply_tf, ContinuousTf};
use crate::plant::models::{FirstOrderFrictionModel, SetupModel, SkinModel};
use crate::preprocess::alignment_matrix;
use crate::signal::{
    am_modulate, protocol_frequencies, sample_count, Unit, Waveform, DEFAULT_CARRIER, SAMPLE_RATE,
    WINDOW_LEN,
};

/// Amplifier gain from the monitor voltage to the screen. A unit message
/// gives a `2√2` V peak-to-peak monitor signal and 150 V at the screen.
pub const AMPLIFIER_GAIN: f64 = 150.0 / (2.0 * SQRT_2);
/// Reference drive level at which the message has unit amplitude.
pub const REFERENCE_VPP: f64 = 150.0;
/// Accelerometer scale, m/s² per g.
pub const GRAVITY: f64 = 9.8;
/// Direction of the friction force in the force sensor's x-y plane.
pub const FORCE_AZIMUTH_DEG: f64 = 155.0;
/// Travel of one sweep.
pub const SWEEP_LENGTH_MM: f64 = 28.0;
pub const POSITION_RATE: f64 = 60.0;
pub const POSITION_RESOLUTION_MM: f64 = 0.1;
/// Finger position at the start of every sweep.
pub const SWEEP_ORIGIN_MM: f64 = 10.0;
/// Format version written into trial metadata.
pub const TRIAL_FORMAT_VERSION: u32 = 1;

const PRE_ROLL_S: f64 = 1.0;
const FADE_IN_S: f64 = 0.5;
const RAMP_S: f64 = 0.025;
/// Normal load between sweeps as a fraction of the sweep load.
const GAP_LEVEL: f64 = 0.5;
/// Longest sweep as a fraction of one sweep cycle.
const MAX_SWEEP_FRACTION: f64 = 0.8;

/// Cutoff (Hz) of the speed law at `speed` mm/s.
pub fn cutoff_for_speed(model: &EmpiricalSpeedModel, speed: f64) -> Result<f64> {
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(Error::invalid(format!(
            "speed must be non-negative, got {speed}"
        )));
    }
    if model.is_extrapolation(speed) {
        log::warn!("speed {speed} mm/s is outside the model's validity range; extrapolating");
    }
    Ok(model.cutoff_hz(speed))
}

/// `k_e · v_i²`: the attraction force produced by a screen voltage.
pub fn electrostatic_force(v_i: &Waveform, k_e: f64) -> Result<Waveform> {
    let out = v_i.samples().iter().map(|v| k_e * v * v).collect();
    Waveform::new(out, v_i.rate(), Unit::Newton)
}

/// Fingertip velocity produced by a friction force through the skin model.
pub fn skin_velocity(friction: &Waveform, skin: &SkinModel) -> Result<Waveform> {
    skin.validate()?;
    Ok(apply_tf(&skin.velocity_tf(), friction)?.with_unit(Unit::MeterPerSecond))
}

/// Lateral setup response (velocity over force) at `freq` Hz.
pub fn setup_lateral_response(setup: &SetupModel, freq: f64) -> num_complex::Complex64 {
    setup.lateral.response(freq)
}

/// How the friction gain and cutoff are chosen for a trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrictionLaw {
    /// Cutoff follows the speed law.
    Empirical(EmpiricalSpeedModel),
    /// Same model at every speed.
    Fixed(FirstOrderFrictionModel),
}

impl FrictionLaw {
    pub fn model_at(&self, speed: f64) -> Result<FirstOrderFrictionModel> {
        match self {
            FrictionLaw::Empirical(m) => {
                cutoff_for_speed(m, speed)?;
                m.friction_model(speed)
            }
            FrictionLaw::Fixed(m) => Ok(*m),
        }
    }
}

/// `linear` applies the first-order model to the message directly;
/// `physical` squares the drive voltage and low-passes the resulting force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantMode {
    Linear,
    Physical,
}

/// Additive white Gaussian noise on the force and acceleration channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Off,
    /// Absolute RMS levels. The force level is the total over the two
    /// lateral axes.
    Rms {
        force_n: f64,
        accel_m_s2: f64,
    },
    /// Signal-to-noise ratio against the RMS of the electrovibration part
    /// of each channel (the friction baseline is excluded).
    Snr {
        db: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub friction: FrictionLaw,
    pub skin: SkinModel,
    /// `None` bypasses the rig dynamics.
    pub setup: Option<SetupModel>,
    pub mu: f64,
    /// Electrostatic constant in N/V². `None` picks the value for which the
    /// identified gain equals the friction law's gain.
    #[serde(default)]
    pub k_e: Option<f64>,
    pub noise: NoiseSpec,
    pub mode: PlantMode,
    /// Internal oversampling factor for the continuous-time filters.
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_oversample() -> usize {
    4
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            friction: FrictionLaw::Empirical(EmpiricalSpeedModel::published()),
            skin: SkinModel::default(),
            setup: Some(SetupModel::default()),
            mu: 0.5,
            k_e: None,
            noise: NoiseSpec::Snr { db: 30.0 },
            mode: PlantMode::Linear,
            oversample: default_oversample(),
        }
    }
}

impl PlantConfig {
    pub fn noise_free(mut self) -> Self {
        self.noise = NoiseSpec::Off;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 2.0) {
            return Err(Error::invalid(format!(
                "mu must lie in (0, 2], got {}",
                self.mu
            )));
        }
        match self.noise {
            NoiseSpec::Rms {
                force_n,
                accel_m_s2,
            } if !(force_n >= 0.0 && accel_m_s2 >= 0.0) => {
                return Err(Error::invalid("noise RMS must be non-negative"));
            }
            NoiseSpec::Snr { db } if !db.is_finite() => {
                return Err(Error::invalid("SNR must be finite"));
            }
            _ => {}
        }
        if let Some(k_e) = self.k_e {
            if !(k_e.is_finite() && k_e > 0.0) {
                return Err(Error::invalid(format!("k_e must be positive, got {k_e}")));
            }
        }
        if self.oversample == 0 {
            return Err(Error::invalid("oversample must be at least 1"));
        }
        self.skin.validate()?;
        if let Some(setup) = &self.setup {
            setup.validate()?;
        }
        match &self.friction {
            FrictionLaw::Empirical(m) => m.validate(),
            FrictionLaw::Fixed(m) => m.validate(),
        }
    }

    /// Electrostatic constant in physical mode at `speed`.
    pub fn electrostatic_constant(&self, speed: f64) -> Result<f64> {
        match self.k_e {
            Some(k) => Ok(k),
            None => {
                // μ·k_e·(G·√(m + A))²/2 carries K·m at the message frequency
                let k = self.friction.model_at(speed)?.k;
                Ok(2.0 * k / (self.mu * AMPLIFIER_GAIN * AMPLIFIER_GAIN))
            }
        }
    }
}

/// One trial of the excitation protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialProtocol {
    pub message_freq: f64,
    pub speed_mm_s: f64,
    pub normal_force_n: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude_vpp: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
}

fn default_carrier() -> f64 {
    DEFAULT_CARRIER
}
fn default_amplitude() -> f64 {
    REFERENCE_VPP
}
fn default_duration() -> f64 {
    10.0
}
fn default_sweeps() -> usize {
    6
}
fn default_rate() -> f64 {
    SAMPLE_RATE
}

impl TrialProtocol {
    pub fn new(message_freq: f64, speed_mm_s: f64, normal_force_n: f64) -> Self {
        Self {
            message_freq,
            speed_mm_s,
            normal_force_n,
            carrier_hz: default_carrier(),
            amplitude_vpp: default_amplitude(),
            duration_s: default_duration(),
            sweeps: default_sweeps(),
            rate_hz: default_rate(),
        }
    }

    /// Message amplitude in monitor volts. The screen drive is
    /// `G·√(A(cos + 1))`, so its peak-to-peak value grows with `√A`.
    pub fn message_amplitude(&self) -> f64 {
        (self.amplitude_vpp / REFERENCE_VPP).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("speed", self.speed_mm_s),
            ("normal force", self.normal_force_n),
            ("duration", self.duration_s),
            ("rate", self.rate_hz),
            ("message frequency", self.message_freq),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.amplitude_vpp.is_finite() && self.amplitude_vpp >= 0.0) {
            return Err(Error::invalid("amplitude must be non-negative"));
        }
        if self.sweeps == 0 {
            return Err(Error::invalid("at least one sweep is required"));
        }
        let n = sample_count(self.duration_s, self.rate_hz)?;
        if self.sweeps * WINDOW_LEN > n {
            return Err(Error::InsufficientData(format!(
                "{} sweeps of {WINDOW_LEN} samples do not fit in {n} samples",
                self.sweeps
            )));
        }
        if self.carrier_hz >= self.rate_hz / 2.0 || self.message_freq >= self.rate_hz / 2.0 {
            return Err(Error::Aliasing {
                freq: self.carrier_hz.max(self.message_freq),
                nyquist: self.rate_hz / 2.0,
            });
        }
        if !protocol_frequencies().contains(&self.message_freq) {
            log::warn!(
                "message frequency {} Hz is not in the protocol set",
                self.message_freq
            );
        }
        if !(20.0..=100.0).contains(&self.speed_mm_s) || !(0.2..=0.6).contains(&self.normal_force_n)
        {
            log::warn!(
                "speed {} mm/s / force {} N lies outside the tested grid",
                self.speed_mm_s,
                self.normal_force_n
            );
        }
        Ok(())
    }
}

/// Timing of the sweeps within a trial: sweep `k` runs from `starts[k]` for
/// `duration` seconds, centred in its share of the trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSchedule {
    pub starts: Vec<f64>,
    pub duration: f64,
    pub cycle: f64,
}

impl SweepSchedule {
    pub fn new(proto: &TrialProtocol) -> Self {
        let cycle = proto.duration_s / proto.sweeps as f64;
        let duration = (SWEEP_LENGTH_MM / proto.speed_mm_s).min(MAX_SWEEP_FRACTION * cycle);
        let starts = (0..proto.sweeps)
            .map(|k| k as f64 * cycle + 0.5 * (cycle - duration))
            .collect();
        Self {
            starts,
            duration,
            cycle,
        }
    }

    /// A single sweep that covers the whole record (pre-roll included), so
    /// the contact load never changes.
    pub fn continuous() -> Self {
        Self {
            starts: vec![-PRE_ROLL_S - 1.0],
            duration: f64::INFINITY,
            cycle: f64::INFINITY,
        }
    }

    /// Contact load profile: 1 during sweeps, [`GAP_LEVEL`] between them,
    /// joined by raised-cosine ramps inside each sweep's ends.
    pub fn load_profile(&self, t: f64) -> f64 {
        for &s in &self.starts {
            let e = s + self.duration;
            if t >= s && t <= e {
                let edge = ((t - s).min(e - t) / RAMP_S).min(1.0);
                return GAP_LEVEL + (1.0 - GAP_LEVEL) * raised_cosine(edge);
            }
        }
        GAP_LEVEL
    }

    /// Finger position along the sweep direction (mm) at `speed` mm/s.
    pub fn position(&self, t: f64, speed: f64) -> f64 {
        let travel = speed * self.duration;
        let mut x = SWEEP_ORIGIN_MM;
        for (k, &s) in self.starts.iter().enumerate() {
            let e = s + self.duration;
            if t < s {
                break;
            }
            if t <= e {
                return SWEEP_ORIGIN_MM + speed * (t - s);
            }
            // after the sweep: hold, then return to the origin before the next one
            let next = self.starts.get(k + 1).copied().unwrap_or(f64::INFINITY);
            let hold_end = e + 0.5 * (next - e);
            x = if t < hold_end || next.is_infinite() {
                SWEEP_ORIGIN_MM + travel
            } else if t < next {
                SWEEP_ORIGIN_MM + travel * (next - t) / (next - hold_end)
            } else {
                SWEEP_ORIGIN_MM
            };
        }
        x
    }
}

fn raised_cosine(x: f64) -> f64 {
    0.5 * (1.0 - (PI * x.clamp(0.0, 1.0)).cos())
}

/// Gain envelope of the pre-roll: 0 at its start, 1 from `FADE_IN_S` on.
fn fade_in(t: f64) -> f64 {
    raised_cosine((t + PRE_ROLL_S) / FADE_IN_S)
}

/// Time-sampled finger position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionTrace {
    pub times_s: Vec<f64>,
    pub mm: Vec<f64>,
}

impl PositionTrace {
    pub fn new(times_s: Vec<f64>, mm: Vec<f64>) -> Result<Self> {
        if times_s.len() != mm.len() {
            return Err(Error::LengthMismatch(format!(
                "{} timestamps for {} positions",
                times_s.len(),
                mm.len()
            )));
        }
        if times_s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("position timestamps must increase"));
        }
        if times_s.iter().chain(&mm).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("position trace"));
        }
        Ok(Self { times_s, mm })
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }

    /// Position at `t`, by linear interpolation (clamped at the ends).
    pub fn at(&self, t: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let i = self.times_s.partition_point(|&x| x <= t);
        Some(match i {
            0 => self.mm[0],
            i if i == self.len() => self.mm[i - 1],
            i => {
                let (t0, t1) = (self.times_s[i - 1], self.times_s[i]);
                let w = (t - t0) / (t1 - t0);
                self.mm[i - 1] * (1.0 - w) + self.mm[i] * w
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialMeta {
    pub format_version: u32,
    pub protocol: TrialProtocol,
    pub participant: u32,
    pub seed: u64,
    /// Present for simulated trials.
    #[serde(default)]
    pub ground_truth: Option<PlantConfig>,
}

/// A synchronized multi-channel recording.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    /// Monitor voltage (amplifier input), V.
    pub voltage: Waveform,
    pub force_x: Waveform,
    pub force_y: Waveform,
    pub force_normal: Waveform,
    /// Raw accelerometer axes in g.
    pub accel_x: Waveform,
    pub accel_y: Waveform,
    pub accel_z: Waveform,
    pub position: PositionTrace,
    pub meta: TrialMeta,
}

impl TrialRecord {
    pub fn channels(&self) -> [(&'static str, &Waveform); 7] {
        [
            ("voltage", &self.voltage),
            ("force_x", &self.force_x),
            ("force_y", &self.force_y),
            ("force_normal", &self.force_normal),
            ("accel_x", &self.accel_x),
            ("accel_y", &self.accel_y),
            ("accel_z", &self.accel_z),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (_, w) in &self.channels()[1..] {
            self.voltage.ensure_compatible(w)?;
        }
        if self.position.times_s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("position timestamps must increase"));
        }
        Ok(())
    }
}

/// Continuous-time inputs to the plant. Both are functions of time in
/// seconds; negative times fall in the pre-roll.
pub struct Excitation<'a> {
    /// Message voltage `V_m(t)` (monitor level).
    pub message: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Screen voltage `G·V_i(t)`.
    pub drive: &'a (dyn Fn(f64) -> f64 + Sync),
}

/// Noise-free plant outputs sampled at the recording rate.
pub struct ChainOutput {
    /// Lateral friction seen by the sensor (baseline plus electrovibration).
    pub friction: Vec<f64>,
    /// The electrovibration part alone, after the rig.
    pub friction_ev: Vec<f64>,
    /// Lateral fingertip acceleration, m/s².
    pub accel: Vec<f64>,
    /// Normal load, N.
    pub normal: Vec<f64>,
}

/// Runs the force chain at `rate·oversample` and decimates to `rate`.
///
/// A one-second pre-roll with a half-second fade-in lets the filters reach
/// steady state without exciting the rig's lightly damped resonance.
#[allow(clippy::too_many_arguments)]
pub fn run_chain(
    cfg: &PlantConfig,
    speed: f64,
    normal_force: f64,
    schedule: &SweepSchedule,
    excitation: &Excitation<'_>,
    rate: f64,
    len: usize,
    oversample: usize,
) -> Result<ChainOutput> {
    let fine_rate = rate * oversample as f64;
    let pre = sample_count(PRE_ROLL_S, fine_rate)?;
    let total = pre + len * oversample;
    let time = |i: usize| (i as f64 - pre as f64) / fine_rate;

    let law = cfg.friction.model_at(speed)?;
    let ev_input: Vec<f64> = match cfg.mode {
        PlantMode::Linear => (0..total)
            .map(|i| {
                let t = time(i);
                (excitation.message)(t) * fade_in(t)
            })
            .collect(),
        PlantMode::Physical => {
            let k_e = cfg.electrostatic_constant(speed)?;
            (0..total)
                .map(|i| {
                    let t = time(i);
                    let v = (excitation.drive)(t) * fade_in(t);
                    cfg.mu * k_e * v * v
                })
                .collect()
        }
    };
    let ev_tf = match cfg.mode {
        PlantMode::Linear => law.transfer_function(),
        PlantMode::Physical => FirstOrderFrictionModel::new(1.0, law.omega_o)?.transfer_function(),
    };
    let ev_input = Waveform::new(ev_input, fine_rate, Unit::Newton)?;
    let ev = apply_tf(&ev_tf, &ev_input)?;
    let accel = apply_tf(&cfg.skin.acceleration_tf(), &ev)?;

    let baseline: Vec<f64> = (0..total)
        .map(|i| {
            let t = time(i);
            cfg.mu * normal_force * schedule.load_profile(t) * fade_in(t)
        })
        .collect();
    let baseline = Waveform::new(baseline, fine_rate, Unit::Newton)?;
    let (ev_meas, base_meas) = match &cfg.setup {
        Some(setup) => {
            let t: ContinuousTf = setup.lateral.transmissibility_tf();
            (apply_tf(&t, &ev)?, apply_tf(&t, &baseline)?)
        }
        None => (ev, baseline),
    };

    let pick = |w: &[f64]| -> Vec<f64> { (0..len).map(|j| w[pre + j * oversample]).collect() };
    let friction_ev = pick(ev_meas.samples());
    let friction = pick(base_meas.samples())
        .iter()
        .zip(&friction_ev)
        .map(|(a, b)| a + b)
        .collect();
    Ok(ChainOutput {
        friction,
        friction_ev,
        accel: pick(accel.samples()),
        normal: (0..len)
            .map(|j| normal_force * schedule.load_profile(j as f64 / rate))
            .collect(),
    })
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Turns noise-free chain output into the recorded channels.
pub(crate) fn record_channels(
    cfg: &PlantConfig,
    chain: &ChainOutput,
    rate: f64,
    seed: u64,
) -> Result<[Waveform; 6]> {
    let (sigma_f, sigma_a) = match cfg.noise {
        NoiseSpec::Off => (0.0, 0.0),
        NoiseSpec::Rms {
            force_n,
            accel_m_s2,
        } => (force_n, accel_m_s2),
        NoiseSpec::Snr { db } => {
            let scale = 10f64.powf(-db / 20.0);
            (rms(&chain.friction_ev) * scale, rms(&chain.accel) * scale)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = |sigma: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .collect()
    };
    let n = chain.friction.len();
    let az = FORCE_AZIMUTH_DEG.to_radians();
    // split the budget so the magnitude-preserving 1-D reduction sees sigma_f
    let per_axis = sigma_f / SQRT_2;
    let nx = noise(per_axis, n);
    let ny = noise(per_axis, n);
    let nn = noise(sigma_f, n);
    let fx: Vec<f64> = chain
        .friction
        .iter()
        .zip(&nx)
        .map(|(f, e)| f * az.cos() + e)
        .collect();
    let fy: Vec<f64> = chain
        .friction
        .iter()
        .zip(&ny)
        .map(|(f, e)| f * az.sin() + e)
        .collect();
    let fnorm: Vec<f64> = chain.normal.iter().zip(&nn).map(|(f, e)| f + e).collect();

    // the alignment maps raw g readings to the force frame; invert it here
    let r = alignment_matrix();
    let raw_axes: Vec<[f64; 3]> = chain
        .accel
        .iter()
        .map(|&a| {
            let v = [a / GRAVITY, 0.0, 0.0];
            // Rᵀ·v, since R is orthogonal
            [
                r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2],
                r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2],
                r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2],
            ]
        })
        .collect();
    let sigma_g = sigma_a / GRAVITY;
    let mut axes: [Vec<f64>; 3] = [noise(sigma_g, n), noise(sigma_g, n), noise(sigma_g, n)];
    for (i, raw) in raw_axes.iter().enumerate() {
        for (axis, value) in axes.iter_mut().zip(raw) {
            axis[i] += value;
        }
    }
    let [ax, ay, az_] = axes;
    Ok([
        Waveform::new(fx, rate, Unit::Newton)?,
        Waveform::new(fy, rate, Unit::Newton)?,
        Waveform::new(fnorm, rate, Unit::Newton)?,
        Waveform::new(ax, rate, Unit::Gravity)?,
        Waveform::new(ay, rate, Unit::Gravity)?,
        Waveform::new(az_, rate, Unit::Gravity)?,
    ])
}

/// Position channel at 60 Hz with 0.1 mm quantization.
pub fn position_trace(schedule: &SweepSchedule, speed: f64, duration: f64) -> PositionTrace {
    let count = (duration * POSITION_RATE).floor() as usize;
    let times: Vec<f64> = (0..count).map(|j| j as f64 / POSITION_RATE).collect();
    let mm = times
        .iter()
        .map(|&t| {
            let x = schedule.position(t, speed);
            (x / POSITION_RESOLUTION_MM).round() * POSITION_RESOLUTION_MM
        })
        .collect();
    PositionTrace { times_s: times, mm }
}

/// A trial with its noise-free plant response computed, ready to be
/// realized under any number of noise seeds. The seed only drives the sensor
/// noise, so Monte-Carlo studies can share one plant run.
pub struct PreparedTrial {
    cfg: PlantConfig,
    proto: TrialProtocol,
    chain: ChainOutput,
    voltage: Waveform,
    position: PositionTrace,
}

impl PreparedTrial {
    pub fn new(cfg: &PlantConfig, proto: &TrialProtocol) -> Result<Self> {
        cfg.validate()?;
        proto.validate()?;
        let rate = proto.rate_hz;
        let len = sample_count(proto.duration_s, rate)?;
        let amp = proto.message_amplitude();
        let (fm, fc) = (proto.message_freq, proto.carrier_hz);
        let schedule = SweepSchedule::new(proto);

        let message = move |t: f64| amp * (TAU * fm * t).cos();
        let drive = move |t: f64| {
            let m = amp * (TAU * fm * t).cos();
            AMPLIFIER_GAIN * (m + amp).max(0.0).sqrt() * (TAU * fc * t).cos()
        };
        let chain = run_chain(
            cfg,
            proto.speed_mm_s,
            proto.normal_force_n,
            &schedule,
            &Excitation {
                message: &message,
                drive: &drive,
            },
            rate,
            len,
            cfg.oversample,
        )?;
        let message_samples = Waveform::from_fn(len, rate, Unit::Volt, message)?;
        Ok(Self {
            cfg: *cfg,
            proto: *proto,
            chain,
            voltage: am_modulate(&message_samples, fc)?,
            position: position_trace(&schedule, proto.speed_mm_s, proto.duration_s),
        })
    }

    pub fn realize(&self, seed: u64) -> Result<TrialRecord> {
        self.realize_with_noise(self.cfg.noise, seed)
    }

    /// Like [`PreparedTrial::realize`] with a different measurement noise.
    /// The noise-free chain is shared, so one preparation serves several
    /// noise levels.
    pub fn realize_with_noise(&self, noise: NoiseSpec, seed: u64) -> Result<TrialRecord> {
        let cfg = PlantConfig { noise, ..self.cfg };
        cfg.validate()?;
        let [force_x, force_y, force_normal, accel_x, accel_y, accel_z] =
            record_channels(&cfg, &self.chain, self.proto.rate_hz, seed)?;
        Ok(TrialRecord {
            voltage: self.voltage.clone(),
            force_x,
            force_y,
            force_normal,
            accel_x,
            accel_y,
            accel_z,
            position: self.position.clone(),
            meta: TrialMeta {
                format_version: TRIAL_FORMAT_VERSION,
                protocol: self.proto,
                participant: 0,
                seed,
                ground_truth: Some(cfg),
            },
        })
    }
}

/// Simulates one trial of the protocol. Identical inputs give identical
/// records.
pub fn simulate_trial(cfg: &PlantConfig, proto: &TrialProtocol, seed: u64) -> Result<TrialRecord> {
    PreparedTrial::new(cfg, proto)?.realize(seed)
}

/// Per-participant skin parameters that drift linearly with speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantGenerator {
    /// Skin parameters at `reference_speed`.
    pub base: SkinModel,
    pub reference_speed: f64,
    /// kg per mm/s. Reported values range from 3.223e-5 to 3.5e-5.
    pub mass_slope: f64,
    /// N/m per mm/s.
    pub stiffness_slope: f64,
    /// Relative between-participant spread (standard deviation), applied
    /// as one seeded multiplier per participant and parameter.
    pub spread: f64,
}

impl Default for ParticipantGenerator {
    fn default() -> Self {
        Self {
            base: SkinModel::default(),
            reference_speed: 40.0,
            mass_slope: 3.5e-5,
            stiffness_slope: 4.036,
            spread: 0.0,
        }
    }
}

impl ParticipantGenerator {
    pub fn skin_at(&self, speed: f64, participant: u32) -> Result<SkinModel> {
        let dv = speed - self.reference_speed;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + participant as u64);
        let mut factor = || {
            let z: f64 = StandardNormal.sample(&mut rng);
            (1.0 + self.spread * z).max(0.05)
        };
        let (fm, fb, fk) = (factor(), factor(), factor());
        SkinModel::new(
            (self.base.m + self.mass_slope * dv) * fm,
            self.base.b * fb,
            (self.base.k + self.stiffness_slope * dv) * fk,
        )
    }
}
