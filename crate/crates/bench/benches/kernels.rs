use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use loglip_core::counterexample::{build_sequences, index_pairs, CounterexampleFamily, SumMode};
use loglip_core::dyadic::{decompose, CutoffBank, PeriodicField};
use loglip_core::harness::{spectral_solve, StepControl, UniformCoefficients};
use loglip_core::weights::{ode_residual, psi_integral};
use loglip_core::{Precision, QuadratureConfig};

fn weights(c: &mut Criterion) {
    let cfg = QuadratureConfig::default();
    c.bench_function("psi_integral lambda=5 [0.3, 1]", |b| {
        b.iter(|| psi_integral(5.0, black_box(0.3), 1.0, &cfg).unwrap())
    });
    c.bench_function("ode_residual lambda=5 two levels", |b| {
        b.iter(|| ode_residual(5.0, black_box(0.3), 1e-4, 2, &cfg).unwrap())
    });
}

fn dyadic(c: &mut Criterion) {
    let n = 1024;
    let bank = CutoffBank::new(1, n).unwrap();
    let w = PeriodicField::from_fn_1d(n, |x| (3.0 * x).sin() + (200.0 * x).cos()).unwrap();
    c.bench_function("dyadic decompose 1d n=1024", |b| b.iter(|| decompose(black_box(&w), &bank).unwrap()));
}

fn spectral(c: &mut Criterion) {
    let coef = UniformCoefficients {
        l: |t: f64| 1.0 + 0.5 * t,
        b: [0.7, -0.4],
        c: |t: f64| 2.0 + (5.0 * t).cos(),
    };
    let u0 = PeriodicField::from_fn_2d(64, |x1, x2| x1.cos() * (2.0 * x2).sin()).unwrap();
    let ctl = StepControl {
        max_step: 1e-2,
        safety: 10.0,
        max_steps: 1000,
    };
    c.bench_function("spectral solve 64^2, 100 steps", |b| {
        b.iter(|| spectral_solve(black_box(&u0), &coef, &[0.0, 1.0], &ctl).unwrap())
    });
}

fn counterexample(c: &mut Criterion) {
    c.bench_function("index_pairs k=5 asymptotic", |b| {
        b.iter(|| index_pairs(black_box(5), SumMode::Asymptotic, Precision::Extended).unwrap())
    });
    let f = CounterexampleFamily::new(build_sequences(1960, Precision::Extended).unwrap(), None).unwrap();
    let t = f.table().a(f.n0()) + 0.3 * f.table().r(f.n0());
    c.bench_function("pde_residual at one point", |b| b.iter(|| f.pde_residual(black_box(t), 0.4, 1.1)));
}

criterion_group!(benches, weights, dyadic, spectral, counterexample);
criterion_main!(benches);
