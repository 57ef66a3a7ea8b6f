use std::hint::black_box;

use criterion::{criterion_group, Criterion};
use pseudomode::dynamics::{integrate_ide, TimeKernel};
use pseudomode::{make_grid, tables, Complex64, Evolution, InitialState};
use pseudomode_bench::{scenario, OMEGA_E};

fn solver_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);

    let excited = scenario(InitialState::ExcitedQubit, 600.0);
    group.bench_function("laplace_excited", |b| {
        b.iter(|| Evolution::new(black_box(&excited)).unwrap())
    });
    let evo = Evolution::new(&excited).unwrap();
    group.bench_function("trace_excited", |b| b.iter(|| evo.trace()));

    let photon = scenario(
        InitialState::GaussianPhoton {
            omega_s: OMEGA_E,
            sigma: 0.05,
        },
        600.0,
    );
    group.bench_function("laplace_photon", |b| {
        b.iter(|| Evolution::new(black_box(&photon)).unwrap())
    });

    let kernel = TimeKernel::exponential(tables::sphere_h2(), OMEGA_E);
    group.bench_function("volterra_excited", |b| {
        b.iter(|| integrate_ide(&kernel, None, Complex64::new(1.0, 0.0), 600.0, 0.25).unwrap())
    });

    let grid = make_grid(2.67, 3.27, 201).unwrap();
    let times: Vec<f64> = (0..=260).map(|i| i as f64 * 0.5).collect();
    group.bench_function("photon_field", |b| {
        b.iter(|| evo.photon_field(black_box(&grid), &times))
    });
    group.finish();
}

criterion_group!(benches, solver_bench);
