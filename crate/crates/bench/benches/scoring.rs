use criterion::{black_box, criterion_group, criterion_main, Criterion};

use bnsl_core::dataset::generate_synthetic;
use bnsl_core::score::{ScoreCounter, Scorer};
use bnsl_core::subset_index::{enumerate_level, VarSet};

fn bench_q_subset(c: &mut Criterion) {
    let (d, _) = generate_synthetic(42, 16, 200, 2, 0.25).unwrap();
    let scorer = Scorer::new(&d);
    let counter = ScoreCounter::new();
    let subset = VarSet::from_members([0, 2, 5, 7, 9, 11, 13, 15]);
    c.bench_function("q_subset k=8 n=200", |b| {
        b.iter(|| scorer.q_subset(black_box(subset), &counter).unwrap())
    });
}

fn bench_level_scoring(c: &mut Criterion) {
    let (d, _) = generate_synthetic(42, 14, 200, 2, 0.25).unwrap();
    let scorer = Scorer::new(&d);
    let counter = ScoreCounter::new();
    c.bench_function("score level k=7 of p=14", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for s in enumerate_level(14, 7).unwrap() {
                acc += scorer.q_subset(s, &counter).unwrap();
            }
            black_box(acc)
        })
    });
}

criterion_group!(benches, bench_q_subset, bench_level_scoring);
criterion_main!(benches);
