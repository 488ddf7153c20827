//! Per-op timing breakdown for one training step shape.

use std::time::Instant;

use sclm_core::numerics::ops;
use sclm_core::numerics::Tensor;

fn timeit(label: &str, reps: usize, mut f: impl FnMut()) {
    f();
    let start = Instant::now();
    for _ in 0..reps {
        f();
    }
    println!("{label}: {:.2} ms", start.elapsed().as_secs_f64() * 1e3 / reps as f64);
}

fn main() {
    let n = 2048usize;
    let d = 64usize;
    let ff = 256usize;
    let v = 259usize;
    let x = Tensor::leaf(vec![n, d], (0..n * d).map(|i| (i as f32).sin() * 0.1).collect()).unwrap();
    let w = Tensor::leaf(vec![d, d], (0..d * d).map(|i| (i as f32).cos() * 0.05).collect()).unwrap();
    let wff = Tensor::leaf(vec![d, ff], (0..d * ff).map(|i| (i as f32).cos() * 0.05).collect()).unwrap();
    let xff = Tensor::leaf(vec![n, ff], (0..n * ff).map(|i| (i as f32).sin() * 0.1).collect()).unwrap();
    let head = Tensor::leaf(vec![d, v], (0..d * v).map(|i| (i as f32).cos() * 0.05).collect()).unwrap();
    let gain = Tensor::leaf(vec![d], vec![1.0; d]).unwrap();
    let table = Tensor::leaf(vec![v, d], (0..v * d).map(|i| (i as f32).sin() * 0.02).collect()).unwrap();
    let ids: Vec<u32> = (0..n).map(|i| (i % 256) as u32).collect();
    let positions: Vec<usize> = (0..n).map(|r| r % 256).collect();
    let targets: Vec<u32> = (0..n).map(|i| ((i * 7) % 256) as u32).collect();
    let mask = vec![true; n];

    timeit("matmul qkv [2048x64]@[64x64] fwd", 20, || {
        ops::matmul(&x, &w).unwrap();
    });
    timeit("matmul ffn [2048x64]@[64x256] fwd", 20, || {
        ops::matmul(&x, &wff).unwrap();
    });
    timeit("matmul head [2048x64]@[64x259] fwd", 20, || {
        ops::matmul(&x, &head).unwrap();
    });
    timeit("matmul ffn fwd+bwd", 20, || {
        let y = ops::matmul(&x, &wff).unwrap();
        ops::sum(&y).backward().unwrap();
        x.zero_grad();
        wff.zero_grad();
    });
    timeit("attention fwd 8x256x4h", 20, || {
        ops::causal_attention(&x, &x, &x, 4, 8, 256).unwrap();
    });
    timeit("attention fwd+bwd", 20, || {
        let y = ops::causal_attention(&x, &x, &x, 4, 8, 256).unwrap();
        ops::sum(&y).backward().unwrap();
        x.zero_grad();
    });
    timeit("rope fwd", 20, || {
        ops::rope(&x, &positions, 4, 16, 10000.0).unwrap();
    });
    timeit("rmsnorm fwd", 20, || {
        ops::rmsnorm(&x, &gain, 1e-5).unwrap();
    });
    timeit("silu fwd [2048x256]", 20, || {
        ops::silu(&xff);
    });
    timeit("mul fwd [2048x256]", 20, || {
        ops::mul(&xff, &xff).unwrap();
    });
    timeit("embedding fwd", 20, || {
        ops::embedding(&table, &ids).unwrap();
    });
    timeit("cross-entropy fwd [2048x259]", 20, || {
        let logits = ops::matmul(&x, &head).unwrap();
        ops::masked_cross_entropy(&logits, &targets, &mask).unwrap();
    });
    timeit("cross-entropy fwd+bwd", 20, || {
        let logits = ops::matmul(&x, &head).unwrap();
        let l = ops::masked_cross_entropy(&logits, &targets, &mask).unwrap();
        l.backward().unwrap();
        x.zero_grad();
        head.zero_grad();
    });
}
