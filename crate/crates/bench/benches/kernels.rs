use std::f64::consts::{FRAC_PI_2, PI};
use std::hint::black_box;

use autores::partition::Partition;
use autores::{
    build_series, classify_stability, evaluate_series, find_roots, integrate, Branch, Mode, ModelParams, PhaseParams,
    RootOptions, SimOptions,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn black() -> PhaseParams {
    PhaseParams::new(-2.0, 5.0 * PI / 6.0, 1.0)
}

fn roots(c: &mut Criterion) {
    let o = RootOptions::default();
    let simple = black();
    let quadruple = PhaseParams::new(-0.25, FRAC_PI_2, 0.75);
    c.bench_function("find_roots/simple", |b| b.iter(|| find_roots(black_box(&simple), &o)));
    c.bench_function("find_roots/quadruple", |b| b.iter(|| find_roots(black_box(&quadruple), &o)));
}

fn partition(c: &mut Criterion) {
    c.bench_function("partition/trace_kappa_0.9", |b| b.iter(|| Partition::new(black_box(0.9))));
    let part = Partition::new(0.9).unwrap();
    c.bench_function("partition/classify", |b| b.iter(|| part.classify(black_box(0.7), black_box(1.2))));
}

fn series_and_stability(c: &mut Criterion) {
    let m = ModelParams::from_phase(1.0, &black());
    let root = find_roots(&black(), &RootOptions::default())
        .unwrap()
        .into_iter()
        .find(|r| (r.sigma - PI).abs() < 1e-9)
        .unwrap();
    c.bench_function("series/build_order_3", |b| b.iter(|| build_series(&m, black_box(&root), Branch::Plus, 3)));
    let s = build_series(&m, &root, Branch::Plus, 3).unwrap();
    c.bench_function("stability/classify", |b| b.iter(|| classify_stability(black_box(&root), &s, &m)));
}

fn integrators(c: &mut Criterion) {
    let m = ModelParams::from_phase(1.0, &black());
    let root = find_roots(&black(), &RootOptions::default())
        .unwrap()
        .into_iter()
        .find(|r| (r.sigma - PI).abs() < 1e-9)
        .unwrap();
    let init = evaluate_series(&build_series(&m, &root, Branch::Plus, 3).unwrap(), 20.0).unwrap();
    let mut g = c.benchmark_group("integrate_20_to_500");
    g.sample_size(20);
    for (name, mode) in [("polar", Mode::Polar), ("cartesian", Mode::Cartesian)] {
        let o = SimOptions { mode, ..Default::default() };
        g.bench_function(name, |b| b.iter(|| integrate(&m, black_box(init), (20.0, 500.0), &o)));
    }
    g.finish();
}

criterion_group!(benches, roots, partition, series_and_stability, integrators);
criterion_main!(benches);
