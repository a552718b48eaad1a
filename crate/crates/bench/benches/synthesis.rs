use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use isoreal::conductivity::{divergence_residual, synthesize, SynthesisOptions};
use isoreal_bench::{cos_grid, cos_saddle, cubic, cubic_grid};

fn synthesis(c: &mut Criterion) {
    let mut g = c.benchmark_group("synthesize");
    g.sample_size(10);
    let opts = SynthesisOptions::default();
    let (p, grid) = (cubic(), cubic_grid(32));
    g.bench_function("cubic/32x32", |b| b.iter(|| black_box(synthesize(&p, &grid, 0.0, &opts).unwrap())));
    let (p, grid) = (cos_saddle(), cos_grid(32));
    g.bench_function("cos-saddle/32x32", |b| b.iter(|| black_box(synthesize(&p, &grid, 0.0, &opts).unwrap())));
    g.finish();
}

fn residual(c: &mut Criterion) {
    let p = cubic();
    let field = synthesize(&p, &cubic_grid(64), 0.0, &SynthesisOptions::default()).unwrap();
    c.bench_function("divergence_residual/cubic/64x64", |b| {
        b.iter(|| black_box(divergence_residual(&p, &field).unwrap()))
    });
}

criterion_group!(benches, synthesis, residual);
criterion_main!(benches);
