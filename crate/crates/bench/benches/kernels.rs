use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use schatten_bench::noisy_low_rank;
use schatten_core::{svt, thin_svd, DenseTensor};
use std::hint::black_box;

fn unfold_fold(c: &mut Criterion) {
    let t = noisy_low_rank(&[50, 50, 20], 10, 1);
    let mut group = c.benchmark_group("unfold");
    for mode in 0..3 {
        group.bench_with_input(BenchmarkId::new("roundtrip", mode), &mode, |b, &k| {
            b.iter(|| {
                let m = t.unfold(k).unwrap();
                black_box(DenseTensor::fold(&m, k, t.dims()).unwrap())
            })
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let t = noisy_low_rank(&[50, 50, 20], 10, 2);
    let mut group = c.benchmark_group("spectral");
    for mode in 0..3 {
        let m = t.unfold(mode).unwrap();
        group.bench_with_input(BenchmarkId::new("svt", mode), &m, |b, m| b.iter(|| black_box(svt(m, 0.5).unwrap())));
        group.bench_with_input(BenchmarkId::new("thin_svd", mode), &m, |b, m| {
            b.iter(|| black_box(thin_svd(m).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, unfold_fold, spectral);
criterion_main!(benches);
