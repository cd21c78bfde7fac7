use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ergsq_bench::bench_signal;
use ergsq_core::{s_sup, window_extrema, window_extrema_naive, ScaleRange};

fn extrema(c: &mut Criterion) {
    let mut group = c.benchmark_group("window_extrema");
    group.sample_size(10);
    for log_len in [12u32, 14, 16] {
        let f = bench_signal(log_len, 1);
        let span = log_len.min(12) as i32;
        group.bench_with_input(BenchmarkId::new("deque", log_len), &f, |b, f| {
            b.iter(|| window_extrema(f, span).unwrap())
        });
        if log_len <= 14 {
            group.bench_with_input(BenchmarkId::new("naive", log_len), &f, |b, f| {
                b.iter(|| window_extrema_naive(f, span).unwrap())
            });
        }
    }
    group.finish();
}

fn supremal(c: &mut Criterion) {
    let mut group = c.benchmark_group("s_sup");
    group.sample_size(10);
    for log_len in [12u32, 16] {
        let f = bench_signal(log_len, 2);
        let range = ScaleRange::new(0, log_len as i32 + 2).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(log_len), &f, |b, f| {
            b.iter(|| s_sup(f, range).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, extrema, supremal);
criterion_main!(benches);
