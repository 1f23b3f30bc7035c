use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use jpm_core::analytic::{continuous_pm_poles, exp_pulse_steady_state};
use jpm_core::meanfield::{self, IntegratorConfig};
use jpm_core::rate::{self, ClosedForm};
use jpm_core::sweep::{self, Axis, Objective, ParamName, Scale, SweepSpec};
use jpm_core::{DetectorParams, DriveSpec};

const W0: f64 = 2.0 * PI * 5.0;

fn ideal() -> DetectorParams {
    DetectorParams::ideal(1.0, 1.0, W0).unwrap()
}

fn meanfield_benches(c: &mut Criterion) {
    let p = ideal();
    let cfg = IntegratorConfig::default().with_t_end(20.0);
    let continuous = DriveSpec::continuous(0.5, W0);
    c.bench_function("meanfield/continuous", |b| {
        b.iter(|| meanfield::integrate(black_box(&p), &continuous, &cfg).unwrap())
    });
    let gaussian = DriveSpec::gaussian(1.0, 2.0, None, W0);
    let cfg = IntegratorConfig::default();
    c.bench_function("meanfield/gaussian_pulse", |b| {
        b.iter(|| meanfield::integrate(black_box(&p), &gaussian, &cfg).unwrap())
    });
}

fn closed_form_benches(c: &mut Criterion) {
    let p = DetectorParams::new(1.0, 0.01, 1.0, 0.0, 100.0, W0).unwrap();
    c.bench_function("rate/efficiency", |b| b.iter(|| rate::efficiency(black_box(&p)).unwrap()));
    let cf = ClosedForm::new(&ideal(), 0.5).unwrap();
    c.bench_function("rate/closed_form_1000_points", |b| {
        b.iter(|| (0..1000).map(|i| cf.evaluate(i as f64 * 0.01).1).sum::<f64>())
    });
}

fn analytic_benches(c: &mut Criterion) {
    let p = ideal();
    c.bench_function("analytic/poles", |b| {
        b.iter(|| continuous_pm_poles(black_box(&p), 0.5).unwrap())
    });
    c.bench_function("analytic/exp_series_order_5", |b| {
        b.iter(|| exp_pulse_steady_state(black_box(&p), 0.01, 5.0, 5).unwrap())
    });
}

fn sweep_benches(c: &mut Criterion) {
    let spec = SweepSpec {
        axis1: Axis::new(ParamName::GammaTl, Scale::Log, 0.1, 10.0, 16),
        axis2: Some(Axis::new(ParamName::AlphaSq, Scale::Log, 1e-3, 1e-1, 4)),
        objective: Objective::PmAtTm { t_m: 10.0 },
        params: ideal(),
        drive: DriveSpec::continuous(0.01, W0),
        integrator: IntegratorConfig::default(),
    };
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("parallel_16x4", |b| b.iter(|| sweep::run_sweep(&spec).unwrap()));
    group.bench_function("serial_16x4", |b| b.iter(|| sweep::run_sweep_serial(&spec).unwrap()));
    group.finish();
}

criterion_group!(
    benches,
    meanfield_benches,
    closed_form_benches,
    analytic_benches,
    sweep_benches
);
criterion_main!(benches);
