use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpwatch_bench::simulated_itemsets;
use fpwatch_core::{FpTree, MinSupport};
use std::hint::black_box;

fn build_by_min_sup(c: &mut Criterion) {
    let txs = simulated_itemsets("irregular", 10_000, 3);
    let mut group = c.benchmark_group("build_10k");
    for pct in [1u64, 2, 5, 10, 20] {
        let ms = MinSupport::new(pct, 100).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{pct}%")), &ms, |b, &ms| {
            b.iter(|| FpTree::build(black_box(&txs), ms))
        });
    }
    group.finish();
}

fn incremental_insert(c: &mut Criterion) {
    let txs = simulated_itemsets("regular", 3_000, 5);
    let tree = FpTree::build(&txs[..2_000], MinSupport::DEFAULT);
    c.bench_function("insert_incremental_1k", |b| {
        b.iter_batched(
            || tree.clone(),
            |mut t| {
                for x in &txs[2_000..] {
                    t.insert_incremental(x);
                }
                t
            },
            criterion::BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, build_by_min_sup, incremental_insert);
criterion_main!(benches);
