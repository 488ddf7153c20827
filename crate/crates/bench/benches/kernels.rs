use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sclm_core::numerics::kernels::mm_nn;

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for &(m, k, n) in &[(2048usize, 64usize, 64usize), (2048, 64, 256), (2048, 64, 259)] {
        let a: Vec<f32> = (0..m * k).map(|i| (i as f32).sin()).collect();
        let b: Vec<f32> = (0..k * n).map(|i| (i as f32).cos()).collect();
        let mut out = vec![0.0f32; m * n];
        group.throughput(Throughput::Elements((2 * m * k * n) as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{m}x{k}x{n}")),
            &(m, k, n),
            |bench, &(m, k, n)| {
                bench.iter(|| mm_nn(&a, &b, &mut out, m, k, n));
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_matmul);
criterion_main!(benches);
