//! Signal representation, synthesis, FFT utilities and amplitude modulation.

mod modulation;
mod ops;
mod spectrum;
mod synth;
mod waveform;

pub use modulation::{
    am_demodulate_sideband, am_demodulate_square, am_modulate, am_modulate_blocks,
    envelope_harmonic, sideband_calibration, squared_envelope, wrap_phase, SinusoidEstimate,
    DEFAULT_CARRIER, MIN_IMPERCEPTIBLE_CARRIER,
};
pub use ops::{integrate_to_velocity, spectral_lowpass};
pub use spectrum::{bin_index, dft_bin, fft_coefficient, irfft, rfft, Spectrum, BIN_TOLERANCE};
pub use synth::{
    geometric_frequencies, log_spaced_frequencies, make_sine, protocol_frequencies, sample_count,
    BIN_WIDTH, SAMPLE_RATE, WINDOW_LEN,
};
pub use waveform::{relative_rms_error, Unit, Waveform};
