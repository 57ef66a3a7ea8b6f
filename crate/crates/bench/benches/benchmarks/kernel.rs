use std::hint::black_box;

use criterion::{criterion_group, BenchmarkId, Criterion};
use pseudomode::nanophotonics::kernel_spectrum;
use pseudomode_bench::{dipole, kernel_grid, silver, sphere};

fn kernel_spectrum_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_spectrum");
    for gap in [2.0, 10.0] {
        let grid = kernel_grid(1001);
        group.bench_with_input(BenchmarkId::from_parameter(gap), &gap, |b, &gap| {
            b.iter(|| {
                kernel_spectrum(&sphere(gap), &silver(), &dipole(), black_box(&grid)).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, kernel_spectrum_bench);
