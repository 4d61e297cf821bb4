use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qamp_bench::{fixture, ALPHA, DIMS};
use qamp_core::{
    amplify, device_gain, discrimination_fidelity, phase_variance, subtract_photons, uhlmann_fidelity,
    AmplifierParams, DeviceConfig, DeviceKind, SubtractionParams,
};

fn channels(c: &mut Criterion) {
    let mut group = c.benchmark_group("amplify");
    for dim in DIMS {
        let (policy, input, _) = fixture(dim);
        let amp = AmplifierParams::new(2.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &input, |b, rho| {
            b.iter(|| amplify(black_box(rho), amp, &policy).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("subtract_photons");
    for dim in DIMS {
        let (_, _, out) = fixture(dim);
        let params = SubtractionParams::new(2).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &out, |b, rho| {
            b.iter(|| subtract_photons(black_box(rho), params).unwrap())
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("device_gain");
    for dim in DIMS {
        let (policy, _, out) = fixture(dim);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &out, |b, rho| {
            b.iter(|| device_gain(black_box(rho), ALPHA, &policy).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("uhlmann_fidelity");
    for dim in DIMS {
        let (policy, _, out) = fixture(dim);
        let flipped = out.parity_flip();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &out, |b, rho| {
            b.iter(|| uhlmann_fidelity(black_box(rho), &flipped, &policy).unwrap())
        });
    }
    group.finish();

    let (policy, _, out) = fixture(64);
    c.bench_function("phase_variance/64", |b| b.iter(|| phase_variance(black_box(&out), &policy).unwrap()));
}

fn pipeline(c: &mut Criterion) {
    let (policy, _, _) = fixture(64);
    let cfg = DeviceConfig::new(DeviceKind::Apa, ALPHA, 2.0, 1, policy).unwrap();
    c.bench_function("discrimination_fidelity/apa/64", |b| {
        b.iter(|| discrimination_fidelity(black_box(&cfg)).unwrap())
    });
}

criterion_group!(benches, channels, metrics, pipeline);
criterion_main!(benches);
