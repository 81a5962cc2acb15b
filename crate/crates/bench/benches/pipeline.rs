use criterion::{black_box, criterion_group, criterion_main, Criterion};
use evib_core::empirical::EmpiricalSpeedModel;
use evib_core::plant::{electrostatic_force, simulate_trial, PlantConfig, TrialProtocol};
use evib_core::preprocess::{analyze_trial, Condition, FrfPoint, FrfPointSet};
use evib_core::signal::{
    am_modulate, make_sine, protocol_frequencies, DEFAULT_CARRIER, SAMPLE_RATE,
};
use evib_core::sysid::{fit_first_order, DEFAULT_BAND_MAX_HZ};

fn signal(c: &mut Criterion) {
    let window = make_sine(245.0, 1.0, 0.0, 0.2, SAMPLE_RATE).unwrap();
    let trial_length = make_sine(245.0, 1.0, 0.0, 10.0, SAMPLE_RATE).unwrap();
    c.bench_function("am_modulate/window", |b| {
        b.iter(|| am_modulate(black_box(&window), DEFAULT_CARRIER))
    });
    c.bench_function("am_modulate/10s", |b| {
        b.iter(|| am_modulate(black_box(&trial_length), DEFAULT_CARRIER))
    });
    c.bench_function("electrostatic_force/10s", |b| {
        b.iter(|| electrostatic_force(black_box(&trial_length), 1.0))
    });
}

fn trial(c: &mut Criterion) {
    let cfg = PlantConfig::default();
    let proto = TrialProtocol::new(245.0, 60.0, 0.4);
    let record = simulate_trial(&cfg, &proto, 1).unwrap();
    let mut g = c.benchmark_group("trial");
    g.sample_size(10);
    g.bench_function("simulate", |b| {
        b.iter(|| simulate_trial(&cfg, &proto, black_box(1)))
    });
    g.bench_function("analyze", |b| b.iter(|| analyze_trial(black_box(&record))));
    g.finish();
}

fn identification(c: &mut Criterion) {
    let truth = EmpiricalSpeedModel::published().friction_model(60.0).unwrap();
    let condition = Condition {
        speed_mm_s: 60.0,
        force_n: 0.4,
        participant: 0,
    };
    let points = FrfPointSet::new(
        protocol_frequencies()
            .into_iter()
            .flat_map(|f| {
                (1..=6).map(move |sweep| FrfPoint {
                    freq_hz: f,
                    response: truth.response(f),
                    sweep,
                    condition,
                })
            })
            .collect(),
    );
    c.bench_function("fit_first_order/cell", |b| {
        b.iter(|| fit_first_order(black_box(&points), DEFAULT_BAND_MAX_HZ))
    });
}

criterion_group!(benches, signal, trial, identification);
criterion_main!(benches);
