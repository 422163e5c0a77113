use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use specforge_bench::generated_rows;
use specforge_core::prompt::{parse_test_case_table, render_table};

fn table(c: &mut Criterion) {
    let mut group = c.benchmark_group("table");
    for n in [10, 100, 1_000] {
        let rows = generated_rows(3, n, 0.0);
        let text = format!(
            "Sure, here they are:\n\n{}\nAnything else?\n",
            render_table(&rows)
        );
        group.throughput(Throughput::Bytes(text.len() as u64));
        group.bench_with_input(BenchmarkId::new("parse", n), &text, |b, t| {
            b.iter(|| parse_test_case_table(t).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("render", n), &rows, |b, r| {
            b.iter(|| render_table(r))
        });
    }
    group.finish();
}

criterion_group!(benches, table);
criterion_main!(benches);
