use std::hint::black_box;

use cfx_bench::{logistic, worked};
use cfx_core::{ebe_search, oracle_all_explanations, FeatureSet, SearchConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn search(c: &mut Criterion) {
    let f = worked(1);
    c.bench_function("ebe/example1", |b| {
        b.iter(|| {
            ebe_search(
                &f.system,
                black_box(&f.instance),
                &f.policy,
                &SearchConfig::default(),
            )
        })
    });

    let mut group = c.benchmark_group("ebe/logistic");
    for m in [16, 64, 256, 1024] {
        let f = logistic(m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &f, |b, f| {
            b.iter(|| {
                ebe_search(
                    &f.system,
                    black_box(&f.instance),
                    &f.policy,
                    &SearchConfig::default(),
                )
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("oracle/logistic");
    group.sample_size(10);
    for m in [8, 12, 16] {
        let f = logistic(m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &f, |b, f| {
            b.iter(|| {
                oracle_all_explanations(
                    &f.system,
                    black_box(&f.instance),
                    &f.policy,
                    m,
                    &FeatureSet::empty(),
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, search);
criterion_main!(benches);
