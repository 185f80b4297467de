use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use edumine::eda::pearson;
use edumine::models::linear::train_ols;
use edumine::models::neural::{train_nn, NnParams};
use edumine::models::tree::{train_tree, TreeParams};
use edumine_bench::{cohort, split, TARGET};

fn bench_tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("tree");
    for n in [1_000, 5_000] {
        let part = split(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &part, |b, part| {
            b.iter(|| {
                train_tree(
                    &part.train,
                    &part.validation,
                    TARGET,
                    &TreeParams::default(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_ols(c: &mut Criterion) {
    let mut group = c.benchmark_group("ols");
    for n in [1_000, 5_000] {
        let part = split(n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &part, |b, part| {
            b.iter(|| train_ols(&part.train, TARGET).unwrap())
        });
    }
    group.finish();
}

fn bench_nn(c: &mut Criterion) {
    let part = split(2_000, 3);
    let params = NnParams {
        max_epochs: 20,
        patience: 20,
        ..NnParams::default()
    };
    c.bench_function("nn/2000x20_epochs", |b| {
        b.iter(|| train_nn(&part.train, &part.validation, TARGET, &params).unwrap())
    });
}

fn bench_pearson(c: &mut Criterion) {
    let data = cohort(10_000, 4);
    c.bench_function("pearson/10000", |b| {
        b.iter(|| pearson(black_box(&data), "reading", "maths").unwrap())
    });
}

criterion_group!(benches, bench_tree, bench_ols, bench_nn, bench_pearson);
criterion_main!(benches);
