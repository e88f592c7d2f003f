use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dereg_bench::{bench_params, fixture};
use dereg_core::em::{e_step, m_step};
use dereg_core::{build_sample_graph, simulate};

fn bench_compile(c: &mut Criterion) {
    let mut group = c.benchmark_group("compile_sample_graph");
    for (r, t) in [(20usize, 50usize), (100, 500)] {
        let net = dereg_core::random_network(r, t, 3, 97).unwrap();
        let params = bench_params();
        let (data, _) = simulate(&net, &params, 1, 98).unwrap();
        let row = data.row(0).to_vec();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{r}x{t}")), &row, |b, row| {
            b.iter(|| build_sample_graph(black_box(&net), black_box(&params), black_box(row)))
        });
    }
    group.finish();
}

fn bench_sum_product(c: &mut Criterion) {
    let mut group = c.benchmark_group("sum_product_10_passes");
    for (r, t) in [(20usize, 50usize), (100, 500)] {
        let net = dereg_core::random_network(r, t, 3, 97).unwrap();
        let params = bench_params();
        let (data, _) = simulate(&net, &params, 1, 98).unwrap();
        let compiled = build_sample_graph(&net, &params, data.row(0)).unwrap();
        group.bench_function(BenchmarkId::from_parameter(format!("{r}x{t}")), |b| {
            b.iter(|| compiled.graph.run_sum_product(black_box(10), 0.0).unwrap())
        });
    }
    group.finish();
}

fn bench_e_step(c: &mut Criterion) {
    let (net, params, data) = fixture(20, 50, 50);
    let mut group = c.benchmark_group("e_step");
    group.sample_size(20);
    group.bench_function("20x50x50samples", |b| {
        b.iter(|| e_step(black_box(&net), black_box(&params), black_box(&data), 10, 0.0).unwrap())
    });
    group.finish();
}

fn bench_m_step(c: &mut Criterion) {
    let (net, params, data) = fixture(20, 50, 50);
    let marginals = e_step(&net, &params, &data, 10, 0.0).unwrap();
    c.bench_function("m_step/20x50x50samples", |b| {
        b.iter(|| m_step(black_box(&marginals), black_box(&data), black_box(&net), &params).unwrap())
    });
}

criterion_group!(benches, bench_compile, bench_sum_product, bench_e_step, bench_m_step);
criterion_main!(benches);
