use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use isoreal::flow::{flow_map, hitting_time, FlowOptions};
use isoreal_bench::{cos_saddle, cos_starts, cubic};

fn hitting(c: &mut Criterion) {
    let p = cos_saddle();
    let starts = cos_starts(32);
    let opts = FlowOptions::default();
    c.bench_function("hitting_time/cos-saddle/32", |b| {
        b.iter(|| {
            for x in &starts {
                black_box(hitting_time(&p, x, 0.0, &opts).unwrap());
            }
        })
    });
}

fn flow(c: &mut Criterion) {
    let p = cubic();
    let opts = FlowOptions::default();
    c.bench_function("flow_map/cubic/t=2", |b| {
        b.iter(|| black_box(flow_map(&p, black_box(&[0.5, -0.5]), 2.0, &opts).unwrap()))
    });
}

criterion_group!(benches, hitting, flow);
criterion_main!(benches);
