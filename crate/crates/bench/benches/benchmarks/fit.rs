use std::hint::black_box;

use criterion::{criterion_group, BenchmarkId, Criterion};
use pseudomode::nanophotonics::kernel_spectrum;
use pseudomode::{fit_lorentzians, FitOptions};
use pseudomode_bench::{dipole, kernel_grid, silver, sphere};

fn fit_bench(c: &mut Criterion) {
    let target = kernel_spectrum(&sphere(2.0), &silver(), &dipole(), &kernel_grid(2001)).unwrap();
    let mut group = c.benchmark_group("fit_lorentzians");
    group.sample_size(10);
    for n in [1, 3] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| fit_lorentzians(black_box(&target), n, None, &FitOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fit_bench);
