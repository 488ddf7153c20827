//! Dense f32 kernels shared by the autodiff graph and the no-grad inference path.
//!
//! All matrices are row-major. The same kernel is used on both paths so that
//! training-time and inference-time forward passes agree bit-for-bit.
//! Reductions accumulate in f64 where loss stability requires it.

use rayon::prelude::*;

/// Work threshold above which matmuls are split across rows with rayon.
/// Row-partitioned accumulation keeps results bit-identical to the serial loop.
const PAR_FLOP_THRESHOLD: usize = 1 << 21;

/// C = A·B with A: m×k, B: k×n, C: m×n.
pub fn mm_nn(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let row = |(i, crow): (usize, &mut [f32])| {
        crow.fill(0.0);
        let arow = &a[i * k..(i + 1) * k];
        for (aik, brow) in arow.iter().zip(b.chunks_exact(n)) {
            let aik = *aik;
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += aik * bj;
            }
        }
    };
    if 2 * m * k * n >= PAR_FLOP_THRESHOLD {
        c.par_chunks_exact_mut(n).enumerate().for_each(row);
    } else {
        c.chunks_exact_mut(n).enumerate().for_each(row);
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes;
/// the summation order is fixed, keeping results deterministic.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f32; 8];
    let mut ac = a.chunks_exact(8);
    let mut bc = b.chunks_exact(8);
    for (av, bv) in (&mut ac).zip(&mut bc) {
        for l in 0..8 {
            lanes[l] += av[l] * bv[l];
        }
    }
    let mut s = ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5]))
        + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]));
    for (x, y) in ac.remainder().iter().zip(bc.remainder()) {
        s += x * y;
    }
    s
}

/// C += A·Bᵀ with A: m×k, B: n×k, C: m×n. Used for dX = dY·Wᵀ in backward.
pub fn mm_nt_acc(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    let row = |(i, crow): (usize, &mut [f32])| {
        let arow = &a[i * k..(i + 1) * k];
        for (cj, brow) in crow.iter_mut().zip(b.chunks_exact(k)) {
            *cj += dot(arow, brow);
        }
    };
    if 2 * m * k * n >= PAR_FLOP_THRESHOLD {
        c.par_chunks_exact_mut(n).enumerate().for_each(row);
    } else {
        c.chunks_exact_mut(n).enumerate().for_each(row);
    }
}

/// C += Aᵀ·B with A: k×m, B: k×n, C: m×n. Used for dW = Xᵀ·dY in backward.
/// Each output row accumulates over k in a fixed order, so the parallel and
/// serial paths produce identical bits.
pub fn mm_tn_acc(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let row = |(i, crow): (usize, &mut [f32])| {
        for (arow, brow) in a.chunks_exact(m).zip(b.chunks_exact(n)) {
            let aki = arow[i];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += aki * bj;
            }
        }
    };
    if 2 * m * k * n >= PAR_FLOP_THRESHOLD && m > 1 {
        c.par_chunks_exact_mut(n).enumerate().for_each(row);
    } else {
        for (arow, brow) in a.chunks_exact(m).zip(b.chunks_exact(n)) {
            for (i, aki) in arow.iter().enumerate() {
                let aki = *aki;
                let crow = &mut c[i * n..(i + 1) * n];
                for (cj, bj) in crow.iter_mut().zip(brow) {
                    *cj += aki * bj;
                }
            }
        }
    }
}

/// Numerically stable softmax over each contiguous row of `row_len` entries.
pub fn softmax_rows(x: &[f32], out: &mut [f32], row_len: usize) {
    debug_assert_eq!(x.len() % row_len, 0);
    debug_assert_eq!(x.len(), out.len());
    for (xr, or) in x.chunks_exact(row_len).zip(out.chunks_exact_mut(row_len)) {
        softmax_row(xr, or);
    }
}

/// Softmax of a single row into `out`.
pub fn softmax_row(x: &[f32], out: &mut [f32]) {
    let max = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f32;
    for (o, v) in out.iter_mut().zip(x) {
        let e = (v - max).exp();
        *o = e;
        sum += e;
    }
    let inv = 1.0 / sum;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

/// log(sum(exp(row))) with max subtraction; exponentials in f32, the
/// reduction in f64.
pub fn logsumexp_row(x: &[f32]) -> f64 {
    let max = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f64;
    for v in x {
        sum += f64::from((v - max).exp());
    }
    f64::from(max) + sum.ln()
}

/// RMS normalization of each row: y = x / rms(x) * gain, rms = sqrt(mean(x²) + eps).
/// Returns the reciprocal rms per row (needed by the backward pass).
pub fn rmsnorm_rows(x: &[f32], gain: &[f32], eps: f32, out: &mut [f32], inv_rms: &mut [f32]) {
    let d = gain.len();
    debug_assert_eq!(x.len() % d, 0);
    for (r, (xr, or)) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)).enumerate() {
        let mut ms = 0.0f64;
        for v in xr {
            ms += f64::from(*v) * f64::from(*v);
        }
        let ri = ((ms / d as f64) as f32 + eps).sqrt().recip();
        inv_rms[r] = ri;
        for ((o, v), g) in or.iter_mut().zip(xr).zip(gain) {
            *o = v * ri * g;
        }
    }
}

/// SiLU activation x·sigmoid(x), elementwise.
pub fn silu(x: &[f32], out: &mut [f32]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o = v * sigmoid(*v);
    }
}

#[inline]
pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Rotary position encoding over rows of `x`, llama-style half rotation.
/// Row `r` is at position `positions[r]`; each head of width `head_dim` is
/// rotated independently. `invert` applies the transpose rotation (backward).
pub fn rope_rows(
    x: &[f32],
    out: &mut [f32],
    positions: &[usize],
    n_heads: usize,
    head_dim: usize,
    theta: f32,
    invert: bool,
) {
    let d = n_heads * head_dim;
    debug_assert_eq!(x.len(), positions.len() * d);
    let half = head_dim / 2;
    let freqs: Vec<f32> = (0..half)
        .map(|i| theta.powf(-2.0 * i as f32 / head_dim as f32))
        .collect();
    // sin/cos per (position, pair); positions repeat across batched rows.
    let max_pos = positions.iter().copied().max().unwrap_or(0);
    let mut table = vec![(0.0f32, 0.0f32); (max_pos + 1) * half];
    for pos in 0..=max_pos {
        for (i, &freq) in freqs.iter().enumerate() {
            let angle = if invert {
                -(pos as f32) * freq
            } else {
                pos as f32 * freq
            };
            table[pos * half + i] = (angle.sin(), angle.cos());
        }
    }
    for ((xr, or), &pos) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)).zip(positions) {
        let row_table = &table[pos * half..(pos + 1) * half];
        for h in 0..n_heads {
            let base = h * head_dim;
            for (i, &(sin, cos)) in row_table.iter().enumerate() {
                let a = xr[base + i];
                let b = xr[base + half + i];
                or[base + i] = a * cos - b * sin;
                or[base + half + i] = a * sin + b * cos;
            }
        }
    }
}
