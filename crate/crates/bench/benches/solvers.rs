use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qss_core::baseline::{dopri_run, RkController};
use qss_core::models::{AdrModel, ScalarModel, SnnModel, SnnParams};
use qss_core::{simulate, Method, QuantumSpec, SimConfig};

fn quiet(method: Method, order: usize, quantum: QuantumSpec, t_end: f64) -> SimConfig {
    let mut c = SimConfig::new(method, order, quantum, t_end);
    c.samples = 0;
    c
}

fn scalar(c: &mut Criterion) {
    let mut g = c.benchmark_group("scalar");
    for order in 1..=3 {
        for method in [Method::Qss, Method::Liqss, Method::Eliqss, Method::Cheqss] {
            let cfg = quiet(method, order, QuantumSpec::absolute(1e-4), 5.0);
            g.bench_with_input(BenchmarkId::new(format!("{method}{order}"), "1e-4"), &cfg, |b, cfg| {
                b.iter(|| simulate(&ScalarModel, cfg.clone()).unwrap().total_steps)
            });
        }
    }
    g.finish();
}

fn adr(c: &mut Criterion) {
    let model = AdrModel::default();
    let mut g = c.benchmark_group("adr");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for order in 2..=3 {
        for method in [Method::Liqss, Method::Eliqss, Method::Cheqss] {
            let cfg = quiet(method, order, QuantumSpec::new(1e-3, 1e-5).unwrap(), 3.0);
            g.bench_with_input(BenchmarkId::new(format!("{method}{order}"), "1e-3,1e-5"), &cfg, |b, cfg| {
                b.iter(|| simulate(&model, cfg.clone()).unwrap().total_steps)
            });
        }
    }
    g.bench_function("dopri/1e-3,1e-5", |b| {
        b.iter(|| dopri_run(&model, RkController::new(1e-3, 1e-5), 3.0, 0).unwrap().total_steps)
    });
    g.finish();
}

fn snn(c: &mut Criterion) {
    let model = SnnModel::new(SnnParams { seed: 1, ..SnnParams::scaled(100) }).unwrap();
    let mut g = c.benchmark_group("snn");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for method in [Method::Qss, Method::Eliqss, Method::Cheqss] {
        let cfg = quiet(method, 2, QuantumSpec::absolute(1e-3), 0.05);
        g.bench_with_input(BenchmarkId::new(format!("{method}2"), "1e-3"), &cfg, |b, cfg| {
            b.iter(|| simulate(&model, cfg.clone()).unwrap().zero_crossings)
        });
    }
    g.finish();
}

criterion_group!(benches, scalar, adr, snn);
criterion_main!(benches);
