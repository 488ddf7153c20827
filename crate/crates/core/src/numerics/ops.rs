//! Graph primitives: forward kernels plus recorded backward closures.
//!
//! Shape checks produce structured errors naming the primitive and the
//! offending axes. Every op records onto the tape only when grads are enabled
//! and an input requires them (see `tensor::no_grad`).

use rayon::prelude::*;

use super::kernels;
use super::tensor::Tensor;
use super::NumericsError;

fn shape_err(op: &'static str, detail: String) -> NumericsError {
    NumericsError::ShapeMismatch { op, detail }
}

/// Elementwise addition of same-shape tensors.
pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor, NumericsError> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa != sb {
        return Err(shape_err("add", format!("lhs {sa:?} vs rhs {sb:?}")));
    }
    let data: Vec<f32> = {
        let (ba, bb) = (a.borrow(), b.borrow());
        ba.data.iter().zip(&bb.data).map(|(x, y)| x + y).collect()
    };
    let (pa, pb) = (a.clone(), b.clone());
    Ok(Tensor::from_op(
        sa,
        data,
        vec![a.clone(), b.clone()],
        Box::new(move |g| {
            if pa.requires_grad() {
                pa.accumulate_grad(|ga| {
                    for (gi, go) in ga.iter_mut().zip(g) {
                        *gi += go;
                    }
                });
            }
            if pb.requires_grad() {
                pb.accumulate_grad(|gb| {
                    for (gi, go) in gb.iter_mut().zip(g) {
                        *gi += go;
                    }
                });
            }
        }),
    ))
}

/// Elementwise (Hadamard) product of same-shape tensors.
pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor, NumericsError> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa != sb {
        return Err(shape_err("mul", format!("lhs {sa:?} vs rhs {sb:?}")));
    }
    let data: Vec<f32> = {
        let (ba, bb) = (a.borrow(), b.borrow());
        ba.data.iter().zip(&bb.data).map(|(x, y)| x * y).collect()
    };
    let (pa, pb) = (a.clone(), b.clone());
    Ok(Tensor::from_op(
        sa,
        data,
        vec![a.clone(), b.clone()],
        Box::new(move |g| {
            if pa.requires_grad() {
                let bv = pb.data();
                pa.accumulate_grad(|ga| {
                    for ((gi, go), y) in ga.iter_mut().zip(g).zip(&bv) {
                        *gi += go * y;
                    }
                });
            }
            if pb.requires_grad() {
                let av = pa.data();
                pb.accumulate_grad(|gb| {
                    for ((gi, go), x) in gb.iter_mut().zip(g).zip(&av) {
                        *gi += go * x;
                    }
                });
            }
        }),
    ))
}

/// Multiplication by a compile-time constant scalar.
pub fn scale(a: &Tensor, c: f32) -> Tensor {
    let data: Vec<f32> = a.borrow().data.iter().map(|x| x * c).collect();
    let pa = a.clone();
    Tensor::from_op(
        a.shape(),
        data,
        vec![a.clone()],
        Box::new(move |g| {
            pa.accumulate_grad(|ga| {
                for (gi, go) in ga.iter_mut().zip(g) {
                    *gi += go * c;
                }
            });
        }),
    )
}

/// Sum of all elements, f64 accumulation, scalar output.
pub fn sum(a: &Tensor) -> Tensor {
    let total: f64 = a.borrow().data.iter().map(|&x| f64::from(x)).sum();
    let pa = a.clone();
    Tensor::from_op(
        vec![1],
        vec![total as f32],
        vec![a.clone()],
        Box::new(move |g| {
            let go = g[0];
            pa.accumulate_grad(|ga| {
                for gi in ga.iter_mut() {
                    *gi += go;
                }
            });
        }),
    )
}

/// 2-D matrix product: a is m×k, b is k×n.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, NumericsError> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa.len() != 2 || sb.len() != 2 {
        return Err(shape_err(
            "matmul",
            format!("expects 2-D operands, got {sa:?} and {sb:?}"),
        ));
    }
    let (m, k) = (sa[0], sa[1]);
    let (k2, n) = (sb[0], sb[1]);
    if k != k2 {
        return Err(shape_err(
            "matmul",
            format!("inner axes differ: lhs {sa:?} (axis 1 = {k}) vs rhs {sb:?} (axis 0 = {k2})"),
        ));
    }
    let mut data = vec![0.0f32; m * n];
    {
        let (ba, bb) = (a.borrow(), b.borrow());
        kernels::mm_nn(&ba.data, &bb.data, &mut data, m, k, n);
    }
    let (pa, pb) = (a.clone(), b.clone());
    Ok(Tensor::from_op(
        vec![m, n],
        data,
        vec![a.clone(), b.clone()],
        Box::new(move |g| {
            if pa.requires_grad() {
                let bv = pb.data();
                pa.accumulate_grad(|ga| kernels::mm_nt_acc(g, &bv, ga, m, n, k));
            }
            if pb.requires_grad() {
                let av = pa.data();
                pb.accumulate_grad(|gb| kernels::mm_tn_acc(&av, g, gb, k, m, n));
            }
        }),
    ))
}

/// SiLU activation, elementwise.
pub fn silu(a: &Tensor) -> Tensor {
    let xv = a.data();
    let mut data = vec![0.0f32; xv.len()];
    kernels::silu(&xv, &mut data);
    let pa = a.clone();
    Tensor::from_op(
        a.shape(),
        data,
        vec![a.clone()],
        Box::new(move |g| {
            let xv = pa.data();
            pa.accumulate_grad(|ga| {
                for ((gi, go), &x) in ga.iter_mut().zip(g).zip(&xv) {
                    let s = kernels::sigmoid(x);
                    *gi += go * s * (1.0 + x * (1.0 - s));
                }
            });
        }),
    )
}

/// Softmax over the last axis.
pub fn softmax(a: &Tensor) -> Result<Tensor, NumericsError> {
    let shape = a.shape();
    let row = *shape
        .last()
        .ok_or_else(|| shape_err("softmax", "rank-0 input".to_string()))?;
    let xv = a.data();
    let mut data = vec![0.0f32; xv.len()];
    kernels::softmax_rows(&xv, &mut data, row);
    let probs = data.clone();
    let pa = a.clone();
    Ok(Tensor::from_op(
        shape,
        data,
        vec![a.clone()],
        Box::new(move |g| {
            pa.accumulate_grad(|ga| {
                for ((gr, gor), pr) in ga
                    .chunks_exact_mut(row)
                    .zip(g.chunks_exact(row))
                    .zip(probs.chunks_exact(row))
                {
                    let dot: f32 = gor.iter().zip(pr).map(|(x, p)| x * p).sum();
                    for ((gi, go), p) in gr.iter_mut().zip(gor).zip(pr) {
                        *gi += p * (go - dot);
                    }
                }
            });
        }),
    ))
}

/// RMS normalization over the last axis with a learned gain vector.
pub fn rmsnorm(x: &Tensor, gain: &Tensor, eps: f32) -> Result<Tensor, NumericsError> {
    let (sx, sg) = (x.shape(), gain.shape());
    let d = *sx
        .last()
        .ok_or_else(|| shape_err("rmsnorm", "rank-0 input".to_string()))?;
    if sg != vec![d] {
        return Err(shape_err(
            "rmsnorm",
            format!("gain shape {sg:?} does not match last axis {d} of input {sx:?}"),
        ));
    }
    let rows = x.numel() / d;
    let mut data = vec![0.0f32; x.numel()];
    let mut inv_rms = vec![0.0f32; rows];
    {
        let (bx, bg) = (x.borrow(), gain.borrow());
        kernels::rmsnorm_rows(&bx.data, &bg.data, eps, &mut data, &mut inv_rms);
    }
    let (px, pg) = (x.clone(), gain.clone());
    Ok(Tensor::from_op(
        sx,
        data,
        vec![x.clone(), gain.clone()],
        Box::new(move |g| {
            let xv = px.data();
            let gv = pg.data();
            if pg.requires_grad() {
                pg.accumulate_grad(|gg| {
                    for (r, (xr, gor)) in xv.chunks_exact(d).zip(g.chunks_exact(d)).enumerate() {
                        let ri = inv_rms[r];
                        for ((gi, go), &xi) in gg.iter_mut().zip(gor).zip(xr) {
                            *gi += go * xi * ri;
                        }
                    }
                });
            }
            if px.requires_grad() {
                px.accumulate_grad(|gx| {
                    for (r, ((xr, gor), gxr)) in xv
                        .chunks_exact(d)
                        .zip(g.chunks_exact(d))
                        .zip(gx.chunks_exact_mut(d))
                        .enumerate()
                    {
                        let ri = inv_rms[r];
                        // du_i = g_i * gain_i where u = x * ri
                        let mut dot = 0.0f64;
                        for ((go, &gain_i), &xi) in gor.iter().zip(&gv).zip(xr) {
                            dot += f64::from(go * gain_i) * f64::from(xi);
                        }
                        let coeff = (dot as f32) * ri * ri * ri / d as f32;
                        for ((gi, (go, &gain_i)), &xi) in
                            gxr.iter_mut().zip(gor.iter().zip(&gv)).zip(xr)
                        {
                            *gi += go * gain_i * ri - coeff * xi;
                        }
                    }
                });
            }
        }),
    ))
}

/// Row lookup: out[r] = table[ids[r]]. Gradient scatters back into the table.
pub fn embedding(table: &Tensor, ids: &[u32]) -> Result<Tensor, NumericsError> {
    let st = table.shape();
    if st.len() != 2 {
        return Err(shape_err(
            "embedding",
            format!("table must be 2-D, got {st:?}"),
        ));
    }
    let (v, d) = (st[0], st[1]);
    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= v) {
        return Err(shape_err(
            "embedding",
            format!("id {bad} out of range for table with {v} rows"),
        ));
    }
    let n = ids.len();
    let mut data = vec![0.0f32; n * d];
    {
        let bt = table.borrow();
        for (row, &id) in data.chunks_exact_mut(d).zip(ids) {
            row.copy_from_slice(&bt.data[id as usize * d..(id as usize + 1) * d]);
        }
    }
    let pt = table.clone();
    let ids: Vec<u32> = ids.to_vec();
    Ok(Tensor::from_op(
        vec![n, d],
        data,
        vec![table.clone()],
        Box::new(move |g| {
            pt.accumulate_grad(|gt| {
                for (gr, &id) in g.chunks_exact(d).zip(&ids) {
                    let dst = &mut gt[id as usize * d..(id as usize + 1) * d];
                    for (t, s) in dst.iter_mut().zip(gr) {
                        *t += s;
                    }
                }
            });
        }),
    ))
}

/// Rotary position encoding over per-head column blocks of a row matrix.
pub fn rope(
    x: &Tensor,
    positions: &[usize],
    n_heads: usize,
    head_dim: usize,
    theta: f32,
) -> Result<Tensor, NumericsError> {
    let sx = x.shape();
    let d = n_heads * head_dim;
    if sx.len() != 2 || sx[1] != d || sx[0] != positions.len() || head_dim % 2 != 0 {
        return Err(shape_err(
            "rope",
            format!(
                "input {sx:?} vs {} positions, {n_heads} heads x {head_dim} dims (head_dim must be even)",
                positions.len()
            ),
        ));
    }
    let xv = x.data();
    let mut data = vec![0.0f32; xv.len()];
    kernels::rope_rows(&xv, &mut data, positions, n_heads, head_dim, theta, false);
    let px = x.clone();
    let pos: Vec<usize> = positions.to_vec();
    Ok(Tensor::from_op(
        sx,
        data,
        vec![x.clone()],
        Box::new(move |g| {
            // Rotation is orthogonal: Jᵀ = rotation by the negated angle.
            let mut back = vec![0.0f32; g.len()];
            kernels::rope_rows(g, &mut back, &pos, n_heads, head_dim, theta, true);
            px.accumulate_grad(|gx| {
                for (gi, b) in gx.iter_mut().zip(&back) {
                    *gi += b;
                }
            });
        }),
    ))
}

/// Multi-head causal self-attention over `n_seqs` packed sequences of
/// `seq_len` rows each. Query row i attends to key/value rows 0..=i of its
/// own sequence; attention probabilities are retained for the backward pass.
pub fn causal_attention(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    n_heads: usize,
    n_seqs: usize,
    seq_len: usize,
) -> Result<Tensor, NumericsError> {
    let (sq, sk, sv) = (q.shape(), k.shape(), v.shape());
    if sq != sk || sq != sv {
        return Err(shape_err(
            "causal_attention",
            format!("q/k/v shapes differ: {sq:?}, {sk:?}, {sv:?}"),
        ));
    }
    let n = n_seqs * seq_len;
    if sq.len() != 2 || sq[0] != n || sq[1] % n_heads != 0 {
        return Err(shape_err(
            "causal_attention",
            format!("q {sq:?} vs {n_seqs} seqs x {seq_len} rows, {n_heads} heads"),
        ));
    }
    let d = sq[1];
    let hd = d / n_heads;
    let scale = 1.0 / (hd as f32).sqrt();

    let mut out = vec![0.0f32; n * d];
    // Per (seq, head) lower-triangular probability matrices, packed row-major.
    let mut probs = vec![0.0f32; n_seqs * n_heads * seq_len * seq_len];
    {
        let (bq, bk, bv) = (q.borrow(), k.borrow(), v.borrow());
        let (qd, kd, vd): (&[f32], &[f32], &[f32]) = (&bq.data, &bk.data, &bv.data);
        let forward_seq = |b: usize, ob: &mut [f32], pb: &mut [f32]| {
            let mut qh = vec![0.0f32; seq_len * hd];
            let mut kh = vec![0.0f32; seq_len * hd];
            let mut vh = vec![0.0f32; seq_len * hd];
            let mut scores = vec![0.0f32; seq_len];
            for h in 0..n_heads {
                gather_head(qd, &mut qh, b, h, seq_len, d, hd);
                gather_head(kd, &mut kh, b, h, seq_len, d, hd);
                gather_head(vd, &mut vh, b, h, seq_len, d, hd);
                let p = &mut pb[h * seq_len * seq_len..][..seq_len * seq_len];
                for i in 0..seq_len {
                    let qi = &qh[i * hd..(i + 1) * hd];
                    for j in 0..=i {
                        let kj = &kh[j * hd..(j + 1) * hd];
                        scores[j] = kernels::dot(qi, kj) * scale;
                    }
                    kernels::softmax_row(&scores[..=i], &mut p[i * seq_len..i * seq_len + i + 1]);
                    let orow = &mut ob[i * d + h * hd..][..hd];
                    for j in 0..=i {
                        let pij = p[i * seq_len + j];
                        let vj = &vh[j * hd..(j + 1) * hd];
                        for (o, val) in orow.iter_mut().zip(vj) {
                            *o += pij * val;
                        }
                    }
                }
            }
        };
        run_per_seq(&mut out, &mut probs, n_seqs, seq_len, d, n_heads, forward_seq);
    }

    let (pq, pk, pv) = (q.clone(), k.clone(), v.clone());
    Ok(Tensor::from_op(
        sq,
        out,
        vec![q.clone(), k.clone(), v.clone()],
        Box::new(move |g| {
            let qv = pq.data();
            let kv = pk.data();
            let vv = pv.data();
            let mut gq = vec![0.0f32; qv.len()];
            let mut gk = vec![0.0f32; kv.len()];
            let mut gv = vec![0.0f32; vv.len()];
            {
                let backward_seq =
                    |b: usize, gqb: &mut [f32], gkb: &mut [f32], gvb: &mut [f32]| {
                        let mut qh = vec![0.0f32; seq_len * hd];
                        let mut kh = vec![0.0f32; seq_len * hd];
                        let mut vh = vec![0.0f32; seq_len * hd];
                        let mut goh = vec![0.0f32; seq_len * hd];
                        let mut dp = vec![0.0f32; seq_len];
                        let mut ds = vec![0.0f32; seq_len];
                        for h in 0..n_heads {
                            gather_head(&qv, &mut qh, b, h, seq_len, d, hd);
                            gather_head(&kv, &mut kh, b, h, seq_len, d, hd);
                            gather_head(&vv, &mut vh, b, h, seq_len, d, hd);
                            gather_head(g, &mut goh, b, h, seq_len, d, hd);
                            let p =
                                &probs[(b * n_heads + h) * seq_len * seq_len..][..seq_len * seq_len];
                            for i in 0..seq_len {
                                let goi = &goh[i * hd..(i + 1) * hd];
                                let pi = &p[i * seq_len..i * seq_len + i + 1];
                                // dP[i,j] = dO_i · V_j ; dV_j += P[i,j] dO_i
                                for j in 0..=i {
                                    let vj = &vh[j * hd..(j + 1) * hd];
                                    dp[j] = kernels::dot(goi, vj);
                                }
                                let mut dot = 0.0f32;
                                for j in 0..=i {
                                    dot += dp[j] * pi[j];
                                }
                                for j in 0..=i {
                                    ds[j] = pi[j] * (dp[j] - dot) * scale;
                                }
                                let gqi = &mut gqb[i * d + h * hd..][..hd];
                                let qi = &qh[i * hd..(i + 1) * hd];
                                for j in 0..=i {
                                    let dsj = ds[j];
                                    let kj = &kh[j * hd..(j + 1) * hd];
                                    for (gc, kc) in gqi.iter_mut().zip(kj) {
                                        *gc += dsj * kc;
                                    }
                                }
                                for j in 0..=i {
                                    let base = j * d + h * hd;
                                    let dsj = ds[j];
                                    let gkj = &mut gkb[base..base + hd];
                                    for (gc, qc) in gkj.iter_mut().zip(qi) {
                                        *gc += dsj * qc;
                                    }
                                }
                                for j in 0..=i {
                                    let base = j * d + h * hd;
                                    let pij = pi[j];
                                    let gvj = &mut gvb[base..base + hd];
                                    for (gc, oc) in gvj.iter_mut().zip(goi) {
                                        *gc += pij * oc;
                                    }
                                }
                            }
                        }
                    };
                let chunk = seq_len * d;
                if n_seqs > 1 && attention_work(n_seqs, seq_len, d) >= ATTN_PAR_THRESHOLD {
                    gq.par_chunks_exact_mut(chunk)
                        .zip(gk.par_chunks_exact_mut(chunk))
                        .zip(gv.par_chunks_exact_mut(chunk))
                        .enumerate()
                        .for_each(|(b, ((gqb, gkb), gvb))| backward_seq(b, gqb, gkb, gvb));
                } else {
                    for (b, ((gqb, gkb), gvb)) in gq
                        .chunks_exact_mut(chunk)
                        .zip(gk.chunks_exact_mut(chunk))
                        .zip(gv.chunks_exact_mut(chunk))
                        .enumerate()
                    {
                        backward_seq(b, gqb, gkb, gvb);
                    }
                }
            }
            if pq.requires_grad() {
                pq.accumulate_grad(|t| add_into(t, &gq));
            }
            if pk.requires_grad() {
                pk.accumulate_grad(|t| add_into(t, &gk));
            }
            if pv.requires_grad() {
                pv.accumulate_grad(|t| add_into(t, &gv));
            }
        }),
    ))
}

const ATTN_PAR_THRESHOLD: usize = 1 << 21;

fn attention_work(n_seqs: usize, seq_len: usize, d: usize) -> usize {
    2 * n_seqs * seq_len * seq_len * d
}

/// Runs `f(b, out_chunk, prob_chunk)` per sequence, in parallel when the
/// work justifies it. Chunks are disjoint, so results are order-independent.
fn run_per_seq(
    out: &mut [f32],
    probs: &mut [f32],
    n_seqs: usize,
    seq_len: usize,
    d: usize,
    n_heads: usize,
    f: impl Fn(usize, &mut [f32], &mut [f32]) + Sync,
) {
    let out_chunk = seq_len * d;
    let prob_chunk = n_heads * seq_len * seq_len;
    if n_seqs > 1 && attention_work(n_seqs, seq_len, d) >= ATTN_PAR_THRESHOLD {
        out.par_chunks_exact_mut(out_chunk)
            .zip(probs.par_chunks_exact_mut(prob_chunk))
            .enumerate()
            .for_each(|(b, (ob, pb))| f(b, ob, pb));
    } else {
        for (b, (ob, pb)) in out
            .chunks_exact_mut(out_chunk)
            .zip(probs.chunks_exact_mut(prob_chunk))
            .enumerate()
        {
            f(b, ob, pb);
        }
    }
}

fn gather_head(src: &[f32], dst: &mut [f32], b: usize, h: usize, t: usize, d: usize, hd: usize) {
    for i in 0..t {
        let row = &src[(b * t + i) * d + h * hd..][..hd];
        dst[i * hd..(i + 1) * hd].copy_from_slice(row);
    }
}

fn add_into(dst: &mut [f32], src: &[f32]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

/// Mean next-token cross-entropy over positions whose mask is true.
/// `logits` is n×v; `targets[r]` is the gold id for row r; rows with a false
/// mask contribute nothing. The mean is accumulated in f64.
pub fn masked_cross_entropy(
    logits: &Tensor,
    targets: &[u32],
    mask: &[bool],
) -> Result<Tensor, NumericsError> {
    let s = logits.shape();
    if s.len() != 2 {
        return Err(shape_err(
            "masked_cross_entropy",
            format!("logits must be 2-D, got {s:?}"),
        ));
    }
    let (n, v) = (s[0], s[1]);
    if targets.len() != n || mask.len() != n {
        return Err(shape_err(
            "masked_cross_entropy",
            format!(
                "logits rows {n} vs {} targets, {} mask entries",
                targets.len(),
                mask.len()
            ),
        ));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t as usize >= v) {
        return Err(shape_err(
            "masked_cross_entropy",
            format!("target id {bad} out of range for vocab {v}"),
        ));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(NumericsError::DegenerateInput(
            "masked_cross_entropy: every position is masked out".to_string(),
        ));
    }
    let mut total = 0.0f64;
    {
        let bl = logits.borrow();
        for (r, row) in bl.data.chunks_exact(v).enumerate() {
            if mask[r] {
                let lse = kernels::logsumexp_row(row);
                total += lse - f64::from(row[targets[r] as usize]);
            }
        }
    }
    let loss = (total / count as f64) as f32;
    let pl = logits.clone();
    let targets: Vec<u32> = targets.to_vec();
    let mask: Vec<bool> = mask.to_vec();
    Ok(Tensor::from_op(
        vec![1],
        vec![loss],
        vec![logits.clone()],
        Box::new(move |g| {
            let go = g[0] / count as f32;
            let lv = pl.data();
            pl.accumulate_grad(|gl| {
                let mut prow = vec![0.0f32; v];
                for (r, (row, grow)) in lv.chunks_exact(v).zip(gl.chunks_exact_mut(v)).enumerate() {
                    if !mask[r] {
                        continue;
                    }
                    kernels::softmax_row(row, &mut prow);
                    for (gi, p) in grow.iter_mut().zip(&prow) {
                        *gi += go * p;
                    }
                    grow[targets[r] as usize] -= go;
                }
            });
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tensor::Tensor;

    fn leaf(shape: Vec<usize>, data: Vec<f32>) -> Tensor {
        Tensor::leaf(shape, data).unwrap()
    }

    #[test]
    fn softmax_symmetry() {
        let x = leaf(vec![2], vec![0.0, 0.0]);
        let y = softmax(&x).unwrap();
        assert_eq!(y.data(), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let x = leaf(vec![3, 4], (0..12).map(|i| (i as f32) * 0.37 - 2.0).collect());
        let y = softmax(&x).unwrap();
        for row in y.data().chunks_exact(4) {
            let s: f32 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_v() {
        let v = 259;
        let logits = leaf(vec![3, v], vec![0.0; 3 * v]);
        let mask = [false, true, false];
        let loss = masked_cross_entropy(&logits, &[0, 5, 0], &mask).unwrap();
        assert!((loss.item() - (v as f32).ln()).abs() < 1e-5);
    }

    #[test]
    fn cross_entropy_non_negative_and_degenerate_errors() {
        let logits = leaf(vec![2, 4], vec![1.0, -2.0, 0.3, 0.9, 0.0, 0.0, 1.0, -1.0]);
        let loss = masked_cross_entropy(&logits, &[2, 1], &[true, true]).unwrap();
        assert!(loss.item() >= 0.0);
        let err = masked_cross_entropy(&logits, &[2, 1], &[false, false]).unwrap_err();
        assert!(matches!(err, NumericsError::DegenerateInput(_)));
    }

    #[test]
    fn rmsnorm_all_equal_vector_is_unit_signed() {
        let x = leaf(vec![1, 4], vec![-3.0; 4]);
        let gain = leaf(vec![4], vec![1.0; 4]);
        let y = rmsnorm(&x, &gain, 1e-6).unwrap();
        for v in y.data() {
            assert!((v - (-1.0)).abs() < 1e-3, "expected c/|c| = -1, got {v}");
        }
    }

    #[test]
    fn backward_sum_gives_ones() {
        let x = leaf(vec![3], vec![1.0, -4.0, 2.5]);
        sum(&x).backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_dot_gives_two_x() {
        let x = leaf(vec![3], vec![1.0, -4.0, 2.5]);
        let loss = sum(&mul(&x, &x).unwrap());
        loss.backward().unwrap();
        let g = x.grad().unwrap();
        for (gi, xi) in g.iter().zip(x.data()) {
            assert!((gi - 2.0 * xi).abs() < 1e-6);
        }
    }

    #[test]
    fn matmul_shape_error_names_axes() {
        let a = leaf(vec![2, 3], vec![0.0; 6]);
        let b = leaf(vec![4, 2], vec![0.0; 8]);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("matmul"), "{msg}");
        assert!(msg.contains("inner axes"), "{msg}");
    }

    #[test]
    fn embedding_rejects_out_of_range_id() {
        let table = leaf(vec![4, 2], vec![0.0; 8]);
        assert!(embedding(&table, &[0, 3]).is_ok());
        assert!(embedding(&table, &[4]).is_err());
    }

    #[test]
    fn embedding_backward_scatters() {
        let table = leaf(vec![3, 2], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let out = embedding(&table, &[1, 1, 2]).unwrap();
        sum(&out).backward().unwrap();
        assert_eq!(table.grad().unwrap(), vec![0.0, 0.0, 2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn attention_is_causal_in_values() {
        // Row 0 output must not depend on later value rows.
        let q = leaf(vec![3, 2], vec![0.5; 6]);
        let k = leaf(vec![3, 2], vec![0.25; 6]);
        let v1 = leaf(vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v2 = leaf(vec![3, 2], vec![1.0, 2.0, 9.0, 9.0, 9.0, 9.0]);
        let o1 = causal_attention(&q, &k, &v1, 1, 1, 3).unwrap();
        let o2 = causal_attention(&q, &k, &v2, 1, 1, 3).unwrap();
        assert_eq!(o1.data()[..2], o2.data()[..2]);
        assert_ne!(o1.data()[4], o2.data()[4]);
    }

    #[test]
    fn deterministic_primitives() {
        let x = leaf(vec![4, 8], (0..32).map(|i| (i as f32).sin()).collect());
        let w = leaf(vec![8, 8], (0..64).map(|i| (i as f32).cos() * 0.1).collect());
        let a = matmul(&x, &w).unwrap().data();
        let b = matmul(&x, &w).unwrap().data();
        assert_eq!(a, b);
    }
}
