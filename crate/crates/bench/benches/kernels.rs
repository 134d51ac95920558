use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hmmerg_bench::positive_model;
use hmmerg_core::conditions::{check_kr, KrParams};
use hmmerg_core::filtering::{filter_path, product_normalized, simulate, ObsWord};
use hmmerg_core::simplex_kernel::{dirac_at, kernel_push, KernelConfig};

fn filter(c: &mut Criterion) {
    let mut group = c.benchmark_group("filter_path");
    for p in [2, 4, 8, 16] {
        let model = positive_model(p, 3, 1);
        let path = simulate(&model, model.stationary(), 10_000, 0);
        let word = ObsWord::new(&model, path.y).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(p), &word, |b, w| {
            b.iter(|| filter_path(&model, model.stationary(), black_box(w)).unwrap())
        });
    }
    group.finish();
}

fn products(c: &mut Criterion) {
    let model = positive_model(8, 3, 2);
    let word = ObsWord::new(&model, simulate(&model, model.stationary(), 1_000, 0).y).unwrap();
    c.bench_function("product_normalized/p8_len1000", |b| b.iter(|| product_normalized(&model, black_box(&word)).unwrap()));
}

fn push(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_push");
    let model = positive_model(3, 3, 3);
    let config = KernelConfig::default();
    for depth in [2, 4, 6] {
        let mut measure = dirac_at(model.stationary());
        for _ in 0..depth {
            measure = kernel_push(&model, &measure, &config).unwrap();
        }
        group.bench_with_input(BenchmarkId::new("atoms", measure.len()), &measure, |b, m| {
            b.iter(|| kernel_push(&model, black_box(m), &config).unwrap())
        });
    }
    group.finish();
}

fn rank_one(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_kr");
    group.sample_size(20);
    for p in [2, 4, 8] {
        let model = positive_model(p, 2, 4);
        let params = KrParams { max_len: 64, restarts: 4, ..KrParams::default() };
        group.bench_with_input(BenchmarkId::from_parameter(p), &model, |b, m| b.iter(|| check_kr(black_box(m), &params)));
    }
    group.finish();
}

criterion_group!(benches, filter, products, push, rank_one);
criterion_main!(benches);
