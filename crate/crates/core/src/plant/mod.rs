//! Synthetic finger–screen–rig plant used as ground truth.

mod models;
mod sim;

pub use models::{FirstOrderFrictionModel, LateralSetup, NormalSetup, SetupModel, SkinModel};
pub(crate) use sim::record_channels;
pub use sim::{
    cutoff_for_speed, electrostatic_force, position_trace, run_chain, setup_lateral_response,
    simulate_trial, skin_velocity, ChainOutput, Excitation, FrictionLaw, NoiseSpec,
    ParticipantGenerator, PlantConfig, PlantMode, PositionTrace, PreparedTrial, SweepSchedule,
    TrialMeta, TrialProtocol, TrialRecord, AMPLIFIER_GAIN, FORCE_AZIMUTH_DEG, GRAVITY,
    POSITION_RATE, POSITION_RESOLUTION_MM, REFERENCE_VPP, SWEEP_LENGTH_MM, SWEEP_ORIGIN_MM,
    TRIAL_FORMAT_VERSION,
};
