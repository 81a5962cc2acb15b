//! Closed-loop checks: simulate trials, then recover the plant through the
//! preprocessing pipeline.

use evib_core::plant::FirstOrderFrictionModel;
use evib_core::plant::{
    simulate_trial, FrictionLaw, NoiseSpec, PlantConfig, SetupModel, TrialProtocol,
};
use evib_core::preprocess::{
    align_accelerometer, analyze_trial, detect_sweeps, estimate_speed, extract_windows,
    reduce_lateral_to_1d, SweepSegment,
};
use evib_core::signal::protocol_frequencies;
use evib_core::signal::wrap_phase;

fn linear_config() -> PlantConfig {
    PlantConfig {
        friction: FrictionLaw::Fixed(FirstOrderFrictionModel::from_hz(0.0147, 961.0).unwrap()),
        ..PlantConfig::default()
    }
    .noise_free()
}

fn short(freq: f64) -> TrialProtocol {
    let mut p = TrialProtocol::new(freq, 60.0, 0.4);
    p.duration_s = 4.0;
    p.sweeps = 3;
    p
}

#[test]
fn noise_free_points_match_friction_times_rig() {
    let cfg = linear_config();
    let FrictionLaw::Fixed(model) = cfg.friction else {
        unreachable!()
    };
    let setup = SetupModel::default();
    for f in protocol_frequencies() {
        let trial = simulate_trial(&cfg, &short(f), 7).unwrap();
        let analysis = analyze_trial(&trial).unwrap();
        assert_eq!(analysis.friction.len(), 3, "at {f} Hz");
        let want = model.response(f) * setup.lateral.transmissibility(f);
        for p in &analysis.friction {
            let mag = (p.response.norm() / want.norm() - 1.0).abs();
            let phase = wrap_phase(p.response.arg() - want.arg()).abs();
            assert!(mag < 0.02, "{f} Hz: magnitude off by {mag}");
            assert!(phase < 0.05, "{f} Hz: phase off by {phase}");
        }
    }
}

#[test]
fn low_frequency_gain_is_k_bar() {
    let trial = simulate_trial(&linear_config(), &short(30.0), 1).unwrap();
    for p in analyze_trial(&trial).unwrap().friction {
        assert!((p.response.norm() / 0.0147 - 1.0).abs() < 0.03);
    }
}

#[test]
fn identity_plant_reads_unity() {
    let cfg = PlantConfig {
        friction: FrictionLaw::Fixed(FirstOrderFrictionModel::gain_only(1.0).unwrap()),
        setup: None,
        ..PlantConfig::default()
    }
    .noise_free();
    let trial = simulate_trial(&cfg, &short(245.0), 3).unwrap();
    for p in analyze_trial(&trial).unwrap().friction {
        assert!((p.response - 1.0).norm() < 5e-3, "{}", p.response);
    }
}

#[test]
fn sweep_count_survives_moderate_noise() {
    let cfg = PlantConfig {
        noise: NoiseSpec::Snr { db: 20.0 },
        ..PlantConfig::default()
    };
    let proto = TrialProtocol::new(100.0, 60.0, 0.4);
    let trial = simulate_trial(&cfg, &proto, 11).unwrap();
    let f1 = reduce_lateral_to_1d(&trial.force_x, &trial.force_y).unwrap();
    let sweeps = detect_sweeps(&f1);
    assert_eq!(sweeps.len(), proto.sweeps);
    assert!(sweeps.windows(2).all(|p| p[0].end_index < p[1].start_index));
}

#[test]
fn accelerometer_round_trip_recovers_lateral_acceleration() {
    let cfg = linear_config();
    let trial = simulate_trial(&cfg, &short(135.0), 5).unwrap();
    let (ax, ay, az) = align_accelerometer(&trial.accel_x, &trial.accel_y, &trial.accel_z).unwrap();
    let peak = ax.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak > 0.0);
    for w in [&ay, &az] {
        assert!(w.samples().iter().all(|v| v.abs() < 1e-3 * peak));
    }
}

#[test]
fn simulated_speed_is_recovered() {
    let trial = simulate_trial(&linear_config(), &TrialProtocol::new(55.0, 60.0, 0.4), 2).unwrap();
    let v = estimate_speed(&trial.position).unwrap();
    assert!((v - 60.0).abs() <= 1.0, "{v}");
}

#[test]
fn windows_shift_with_the_record() {
    let trial = simulate_trial(&linear_config(), &short(75.0), 9).unwrap();
    let f1 = reduce_lateral_to_1d(&trial.force_x, &trial.force_y).unwrap();
    let sweeps = detect_sweeps(&f1);
    let shift = 137;
    let moved: Vec<SweepSegment> = sweeps
        .iter()
        .map(|s| SweepSegment {
            start_index: s.start_index + shift,
            end_index: s.end_index + shift,
            middle_index: s.middle_index + shift,
            left_to_right: s.left_to_right,
        })
        .collect();
    let mut shifted = trial.clone();
    for w in [
        &mut shifted.voltage,
        &mut shifted.force_x,
        &mut shifted.force_y,
        &mut shifted.force_normal,
        &mut shifted.accel_x,
        &mut shifted.accel_y,
        &mut shifted.accel_z,
    ] {
        let mut v = vec![0.0; shift];
        v.extend_from_slice(w.samples());
        *w = w.with_samples(v).unwrap();
    }
    let a = extract_windows(&trial, &sweeps).unwrap();
    let b = extract_windows(&shifted, &moved).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.offset + shift, y.offset);
        assert_eq!(x.voltage.samples(), y.voltage.samples());
        assert_eq!(x.friction_1d.samples(), y.friction_1d.samples());
    }
}
