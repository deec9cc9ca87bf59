use criterion::{criterion_group, criterion_main, Criterion};

use bnsl_core::dataset::generate_synthetic;
use bnsl_core::dp_levelwise::RunOptions;
use bnsl_core::{run, run_baseline};

fn bench_learners(c: &mut Criterion) {
    let (d, _) = generate_synthetic(42, 12, 200, 2, 0.25).unwrap();
    let opts = RunOptions {
        workers: Some(1),
        ..Default::default()
    };
    let mut group = c.benchmark_group("learn p=12 n=200");
    group.sample_size(20);
    group.bench_function("levelwise", |b| b.iter(|| run(&d, &opts).unwrap()));
    group.bench_function("baseline", |b| b.iter(|| run_baseline(&d, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_learners);
criterion_main!(benches);
