//! Parameter storage, initialization, and the single forward implementation.
//!
//! There is exactly one forward path: a graph built from numerics ops. The
//! no-grad inference entry points wrap parameters in constant tensors, so
//! training-time and evaluation-time logits agree bit-for-bit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::batch::{build_batch, BuiltBatch};
use super::{GenMode, ModelConfig, ModelError, Provenance, ROPE_THETA};
use crate::numerics::kernels;
use crate::numerics::ops;
use crate::numerics::tensor::{no_grad, Tensor};

/// One transformer block's parameters. Projection matrices are stored
/// input-major, so activations multiply on the left: y = x · W.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub attn_norm: Vec<f32>,
    pub wq: Vec<f32>,
    pub wk: Vec<f32>,
    pub wv: Vec<f32>,
    pub wo: Vec<f32>,
    pub ffn_norm: Vec<f32>,
    pub w_gate: Vec<f32>,
    pub w_up: Vec<f32>,
    pub w_down: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct TransformerModel {
    pub config: ModelConfig,
    pub tok_emb: Vec<f32>,
    pub layers: Vec<BlockParams>,
    pub final_norm: Vec<f32>,
    pub head: Vec<f32>,
    pub provenance: Provenance,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f32 {
    // Box-Muller on two open-interval uniforms; fully deterministic per seed.
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 / ((1u64 << 53) + 1) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()) as f32
}

fn init_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f32) -> Vec<f32> {
    (0..rows * cols).map(|_| gaussian(rng) * std).collect()
}

impl TransformerModel {
    /// Fresh model: weights from seeded normal(0, 0.02), norm gains exactly 1.
    pub fn init(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.d_model;
        let std = 0.02;
        let tok_emb = init_matrix(&mut rng, config.vocab_size, d, std);
        let mut layers = Vec::with_capacity(config.n_layers);
        for _ in 0..config.n_layers {
            layers.push(BlockParams {
                attn_norm: vec![1.0; d],
                wq: init_matrix(&mut rng, d, d, std),
                wk: init_matrix(&mut rng, d, d, std),
                wv: init_matrix(&mut rng, d, d, std),
                wo: init_matrix(&mut rng, d, d, std),
                ffn_norm: vec![1.0; d],
                w_gate: init_matrix(&mut rng, d, config.d_ff, std),
                w_up: init_matrix(&mut rng, d, config.d_ff, std),
                w_down: init_matrix(&mut rng, config.d_ff, d, std),
            });
        }
        let final_norm = vec![1.0; d];
        let head = init_matrix(&mut rng, d, config.vocab_size, std);
        Ok(TransformerModel {
            config,
            tok_emb,
            layers,
            final_norm,
            head,
            provenance: Provenance::default(),
        })
    }

    /// Canonical (name, shape) listing; the checkpoint tensor table and the
    /// optimizer state both follow this order.
    pub fn param_entries(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
        let d = config.d_model;
        let mut out = vec![("tok_emb".to_string(), vec![config.vocab_size, d])];
        for i in 0..config.n_layers {
            out.push((format!("layers.{i}.attn_norm"), vec![d]));
            out.push((format!("layers.{i}.wq"), vec![d, d]));
            out.push((format!("layers.{i}.wk"), vec![d, d]));
            out.push((format!("layers.{i}.wv"), vec![d, d]));
            out.push((format!("layers.{i}.wo"), vec![d, d]));
            out.push((format!("layers.{i}.ffn_norm"), vec![d]));
            out.push((format!("layers.{i}.w_gate"), vec![d, config.d_ff]));
            out.push((format!("layers.{i}.w_up"), vec![d, config.d_ff]));
            out.push((format!("layers.{i}.w_down"), vec![config.d_ff, d]));
        }
        out.push(("final_norm".to_string(), vec![d]));
        out.push(("head".to_string(), vec![d, config.vocab_size]));
        out
    }

    pub fn visit_params<'a>(&'a self, mut f: impl FnMut(&str, &'a [f32])) {
        f("tok_emb", &self.tok_emb);
        for (i, l) in self.layers.iter().enumerate() {
            f(&format!("layers.{i}.attn_norm"), &l.attn_norm);
            f(&format!("layers.{i}.wq"), &l.wq);
            f(&format!("layers.{i}.wk"), &l.wk);
            f(&format!("layers.{i}.wv"), &l.wv);
            f(&format!("layers.{i}.wo"), &l.wo);
            f(&format!("layers.{i}.ffn_norm"), &l.ffn_norm);
            f(&format!("layers.{i}.w_gate"), &l.w_gate);
            f(&format!("layers.{i}.w_up"), &l.w_up);
            f(&format!("layers.{i}.w_down"), &l.w_down);
        }
        f("final_norm", &self.final_norm);
        f("head", &self.head);
    }

    pub fn visit_params_mut(&mut self, mut f: impl FnMut(&str, &mut Vec<f32>)) {
        f("tok_emb", &mut self.tok_emb);
        for (i, l) in self.layers.iter_mut().enumerate() {
            f(&format!("layers.{i}.attn_norm"), &mut l.attn_norm);
            f(&format!("layers.{i}.wq"), &mut l.wq);
            f(&format!("layers.{i}.wk"), &mut l.wk);
            f(&format!("layers.{i}.wv"), &mut l.wv);
            f(&format!("layers.{i}.wo"), &mut l.wo);
            f(&format!("layers.{i}.ffn_norm"), &mut l.ffn_norm);
            f(&format!("layers.{i}.w_gate"), &mut l.w_gate);
            f(&format!("layers.{i}.w_up"), &mut l.w_up);
            f(&format!("layers.{i}.w_down"), &mut l.w_down);
        }
        f("final_norm", &mut self.final_norm);
        f("head", &mut self.head);
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(|_, p| n += p.len());
        n
    }

    /// Parameters of one block (attention + feed-forward + both norms).
    pub fn block_param_count(&self) -> usize {
        let d = self.config.d_model;
        2 * d + 4 * d * d + 3 * d * self.config.d_ff
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<(), ModelError> {
        if tokens.len() > self.config.max_seq_len {
            return Err(ModelError::SequenceTooLong {
                len: tokens.len(),
                max: self.config.max_seq_len,
            });
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(ModelError::TokenOutOfRange {
                id: bad,
                vocab: self.config.vocab_size,
            });
        }
        Ok(())
    }

    /// Logits for every position, row-major T × vocab. Causal: position t
    /// depends only on tokens 0..=t.
    pub fn forward(&self, tokens: &[u32]) -> Result<Vec<f32>, ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyPrompt);
        }
        self.check_tokens(tokens)?;
        no_grad(|| {
            let graph = GraphParams::constants(self);
            Ok(graph.forward(tokens, 1, tokens.len())?.data())
        })
    }

    /// Mean next-token cross-entropy over masked-in target positions.
    /// Sequences must already carry their anchor token (BOS) if they need one.
    pub fn masked_loss(&self, seqs: &[(&[u32], &[bool])], pad_id: u32) -> Result<f64, ModelError> {
        let built = build_batch(seqs, pad_id, self.config.vocab_size, self.config.max_seq_len)?;
        no_grad(|| {
            let graph = GraphParams::constants(self);
            let loss = graph.loss(&built)?;
            Ok(f64::from(loss.item()))
        })
    }

    /// Sum of log p(continuation[j] | prompt ++ continuation[..j]), in nats.
    pub fn sequence_logprob(&self, prompt: &[u32], continuation: &[u32]) -> Result<f64, ModelError> {
        if continuation.is_empty() {
            return Err(ModelError::EmptyContinuation);
        }
        if prompt.is_empty() {
            return Err(ModelError::EmptyPrompt);
        }
        let mut seq = Vec::with_capacity(prompt.len() + continuation.len());
        seq.extend_from_slice(prompt);
        seq.extend_from_slice(continuation);
        self.check_tokens(&seq)?;
        let inputs = &seq[..seq.len() - 1];
        let logits = self.forward(inputs)?;
        let v = self.config.vocab_size;
        let mut total = 0.0f64;
        for (j, &tok) in continuation.iter().enumerate() {
            let row = &logits[(prompt.len() - 1 + j) * v..(prompt.len() + j) * v];
            total += f64::from(row[tok as usize]) - kernels::logsumexp_row(row);
        }
        Ok(total)
    }

    /// Autoregressive decoding. Greedy mode takes the arg-max with ties
    /// resolved toward the lowest token id; temperature mode samples from
    /// softmax(logits / t) with a seeded generator. Decoding stops at
    /// `eos_id`, after `max_new` tokens, or when the context window fills.
    pub fn generate(
        &self,
        prompt: &[u32],
        max_new: usize,
        mode: GenMode,
        eos_id: u32,
    ) -> Result<Vec<u32>, ModelError> {
        if prompt.is_empty() {
            return Err(ModelError::EmptyPrompt);
        }
        self.check_tokens(prompt)?;
        let mut rng = match mode {
            GenMode::Greedy => None,
            GenMode::Temperature { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        let v = self.config.vocab_size;
        let mut seq = prompt.to_vec();
        let mut out = Vec::new();
        for _ in 0..max_new {
            if seq.len() >= self.config.max_seq_len {
                break;
            }
            let logits = self.forward(&seq)?;
            let last = &logits[(seq.len() - 1) * v..seq.len() * v];
            let next = match mode {
                GenMode::Greedy => argmax_lowest(last),
                GenMode::Temperature { t, .. } => {
                    let rng = rng.as_mut().expect("sampler present");
                    sample_temperature(last, t, rng)
                }
            };
            if next == eos_id {
                break;
            }
            seq.push(next);
            out.push(next);
        }
        Ok(out)
    }
}

fn argmax_lowest(row: &[f32]) -> u32 {
    let mut best = 0usize;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best as u32
}

fn sample_temperature(row: &[f32], t: f32, rng: &mut ChaCha8Rng) -> u32 {
    let scaled: Vec<f32> = row.iter().map(|x| x / t.max(1e-6)).collect();
    let mut probs = vec![0.0f32; scaled.len()];
    kernels::softmax_row(&scaled, &mut probs);
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut acc = 0.0f64;
    for (i, &p) in probs.iter().enumerate() {
        acc += f64::from(p);
        if u < acc {
            return i as u32;
        }
    }
    (probs.len() - 1) as u32
}

/// Parameters lifted into graph tensors: constants for inference, leaves for
/// training. Holds the one and only forward implementation.
pub(crate) struct GraphParams {
    pub config: ModelConfig,
    pub tok_emb: Tensor,
    pub layers: Vec<GraphBlock>,
    pub final_norm: Tensor,
    pub head: Tensor,
}

pub(crate) struct GraphBlock {
    pub attn_norm: Tensor,
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub wo: Tensor,
    pub ffn_norm: Tensor,
    pub w_gate: Tensor,
    pub w_up: Tensor,
    pub w_down: Tensor,
}

impl GraphParams {
    pub fn constants(model: &TransformerModel) -> Self {
        Self::build(model, false)
    }

    pub fn leaves(model: &TransformerModel) -> Self {
        Self::build(model, true)
    }

    fn build(model: &TransformerModel, requires_grad: bool) -> Self {
        let c = &model.config;
        let d = c.d_model;
        let t = |shape: Vec<usize>, data: &[f32]| {
            Tensor::new(shape, data.to_vec(), requires_grad).expect("parameter tensor")
        };
        GraphParams {
            config: *c,
            tok_emb: t(vec![c.vocab_size, d], &model.tok_emb),
            layers: model
                .layers
                .iter()
                .map(|l| GraphBlock {
                    attn_norm: t(vec![d], &l.attn_norm),
                    wq: t(vec![d, d], &l.wq),
                    wk: t(vec![d, d], &l.wk),
                    wv: t(vec![d, d], &l.wv),
                    wo: t(vec![d, d], &l.wo),
                    ffn_norm: t(vec![d], &l.ffn_norm),
                    w_gate: t(vec![d, c.d_ff], &l.w_gate),
                    w_up: t(vec![d, c.d_ff], &l.w_up),
                    w_down: t(vec![c.d_ff, d], &l.w_down),
                })
                .collect(),
            final_norm: t(vec![d], &model.final_norm),
            head: t(vec![d, c.vocab_size], &model.head),
        }
    }

    /// Forward over `n_seqs` packed sequences of `seq_len` tokens each.
    /// Returns logits of shape (n_seqs*seq_len) × vocab.
    pub fn forward(&self, ids: &[u32], n_seqs: usize, seq_len: usize) -> Result<Tensor, ModelError> {
        debug_assert_eq!(ids.len(), n_seqs * seq_len);
        let c = &self.config;
        let positions: Vec<usize> = (0..n_seqs * seq_len).map(|r| r % seq_len).collect();
        let eps = c.norm_eps;
        let mut x = ops::embedding(&self.tok_emb, ids)?;
        for layer in &self.layers {
            let h = ops::rmsnorm(&x, &layer.attn_norm, eps)?;
            let q = ops::matmul(&h, &layer.wq)?;
            let k = ops::matmul(&h, &layer.wk)?;
            let v = ops::matmul(&h, &layer.wv)?;
            let q = ops::rope(&q, &positions, c.n_heads, c.head_dim(), ROPE_THETA)?;
            let k = ops::rope(&k, &positions, c.n_heads, c.head_dim(), ROPE_THETA)?;
            let attn = ops::causal_attention(&q, &k, &v, c.n_heads, n_seqs, seq_len)?;
            let proj = ops::matmul(&attn, &layer.wo)?;
            x = ops::add(&x, &proj)?;
            let h2 = ops::rmsnorm(&x, &layer.ffn_norm, eps)?;
            let gate = ops::silu(&ops::matmul(&h2, &layer.w_gate)?);
            let up = ops::matmul(&h2, &layer.w_up)?;
            let ff = ops::matmul(&ops::mul(&gate, &up)?, &layer.w_down)?;
            x = ops::add(&x, &ff)?;
        }
        let x = ops::rmsnorm(&x, &self.final_norm, eps)?;
        Ok(ops::matmul(&x, &self.head)?)
    }

    pub fn loss(&self, batch: &BuiltBatch) -> Result<Tensor, ModelError> {
        let logits = self.forward(&batch.inputs, batch.n_seqs, batch.seq_len)?;
        Ok(ops::masked_cross_entropy(&logits, &batch.targets, &batch.mask)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(seed: u64) -> ModelConfig {
        ModelConfig {
            vocab_size: 17,
            d_model: 8,
            n_heads: 2,
            n_layers: 2,
            d_ff: 16,
            max_seq_len: 32,
            norm_eps: 1e-5,
            seed,
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = TransformerModel::init(tiny_config(7)).unwrap();
        let b = TransformerModel::init(tiny_config(7)).unwrap();
        assert_eq!(a.tok_emb, b.tok_emb);
        assert_eq!(a.layers, b.layers);
        assert_eq!(a.head, b.head);
        let c = TransformerModel::init(tiny_config(8)).unwrap();
        assert_ne!(a.tok_emb, c.tok_emb);
    }

    #[test]
    fn norm_gains_start_at_one() {
        let m = TransformerModel::init(tiny_config(1)).unwrap();
        assert!(m.final_norm.iter().all(|&g| g == 1.0));
        assert!(m.layers.iter().all(|l| l.attn_norm.iter().all(|&g| g == 1.0)));
        assert!(m.layers.iter().all(|l| l.ffn_norm.iter().all(|&g| g == 1.0)));
    }

    #[test]
    fn config_validation() {
        let mut c = tiny_config(0);
        c.n_heads = 3; // 8 % 3 != 0
        assert!(TransformerModel::init(c).is_err());
        let mut c = tiny_config(0);
        c.n_layers = 0;
        assert!(TransformerModel::init(c).is_err());
    }

    #[test]
    fn forward_shape_and_token_checks() {
        let m = TransformerModel::init(tiny_config(3)).unwrap();
        let logits = m.forward(&[1, 2, 3]).unwrap();
        assert_eq!(logits.len(), 3 * 17);
        assert!(matches!(
            m.forward(&[16, 17]),
            Err(ModelError::TokenOutOfRange { id: 17, .. })
        ));
        let long = vec![0u32; 33];
        assert!(matches!(
            m.forward(&long),
            Err(ModelError::SequenceTooLong { .. })
        ));
    }

    #[test]
    fn forward_is_causal_exactly() {
        let m = TransformerModel::init(tiny_config(5)).unwrap();
        let short = m.forward(&[4, 9, 2]).unwrap();
        let long = m.forward(&[4, 9, 2, 11, 7]).unwrap();
        assert_eq!(short[..3 * 17], long[..3 * 17]);
    }

    #[test]
    fn greedy_generation_is_deterministic_and_respects_max_new() {
        let m = TransformerModel::init(tiny_config(9)).unwrap();
        let a = m.generate(&[1, 2], 6, GenMode::Greedy, 16).unwrap();
        let b = m.generate(&[1, 2], 6, GenMode::Greedy, 16).unwrap();
        assert_eq!(a, b);
        let none = m.generate(&[1, 2], 0, GenMode::Greedy, 16).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn temperature_generation_is_seed_deterministic() {
        let m = TransformerModel::init(tiny_config(9)).unwrap();
        let mode = GenMode::Temperature { t: 0.8, seed: 42 };
        let a = m.generate(&[1, 2], 6, mode, 16).unwrap();
        let b = m.generate(&[1, 2], 6, mode, 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn logprob_chain_rule_and_single_token() {
        let m = TransformerModel::init(tiny_config(11)).unwrap();
        let p = [3u32, 1];
        let c1 = [5u32, 8];
        let c2 = [2u32, 10, 4];
        let whole: Vec<u32> = c1.iter().chain(c2.iter()).copied().collect();
        let lhs = m.sequence_logprob(&p, &whole).unwrap();
        let mid: Vec<u32> = p.iter().chain(c1.iter()).copied().collect();
        let rhs = m.sequence_logprob(&p, &c1).unwrap() + m.sequence_logprob(&mid, &c2).unwrap();
        assert!((lhs - rhs).abs() < 1e-4, "{lhs} vs {rhs}");
        assert!(lhs <= 0.0);

        // single token equals the log-softmax entry of the forward logits
        let logits = m.forward(&p).unwrap();
        let row = &logits[17..34];
        let expect = f64::from(row[6]) - crate::numerics::kernels::logsumexp_row(row);
        let got = m.sequence_logprob(&p, &[6]).unwrap();
        assert!((got - expect).abs() < 1e-9);
    }

    #[test]
    fn logprob_contract_errors() {
        let m = TransformerModel::init(tiny_config(11)).unwrap();
        assert!(matches!(
            m.sequence_logprob(&[1], &[]),
            Err(ModelError::EmptyContinuation)
        ));
        assert!(matches!(
            m.sequence_logprob(&[], &[1]),
            Err(ModelError::EmptyPrompt)
        ));
    }

    #[test]
    fn masked_loss_uniform_position_is_ln_vocab() {
        // A fresh model is not uniform, so build one with zeroed head: logits
        // are then exactly zero and every row is uniform.
        let mut m = TransformerModel::init(tiny_config(2)).unwrap();
        m.head.iter_mut().for_each(|w| *w = 0.0);
        let seq: Vec<u32> = vec![1, 2, 3, 4];
        let mask = vec![false, false, true, false];
        let loss = m.masked_loss(&[(&seq, &mask)], 0).unwrap();
        assert!((loss - (17f64).ln()) < 1e-5);
    }

    #[test]
    fn masked_loss_matches_explicit_summation() {
        let m = TransformerModel::init(tiny_config(13)).unwrap();
        let seq: Vec<u32> = vec![3, 7, 1, 12, 5];
        let mask = vec![false, true, false, true, true];
        let loss = m.masked_loss(&[(&seq, &mask)], 0).unwrap();
        // Oracle: per-position cross-entropy summed directly.
        let logits = m.forward(&seq[..4]).unwrap();
        let v = 17;
        let mut total = 0.0f64;
        let mut n = 0;
        for pos in 0..4 {
            if mask[pos + 1] {
                let row = &logits[pos * v..(pos + 1) * v];
                total += crate::numerics::kernels::logsumexp_row(row) - f64::from(row[seq[pos + 1] as usize]);
                n += 1;
            }
        }
        let oracle = total / n as f64;
        assert!((loss - oracle).abs() < 1e-6, "{loss} vs {oracle}");
    }

    #[test]
    fn masked_loss_prompt_extension_keeps_target_losses() {
        // Doubling the masked (prompt) region with the same unmasked targets
        // under teacher forcing: only unmasked positions enter the mean, and
        // their per-target losses stay defined at the same target tokens.
        let m = TransformerModel::init(tiny_config(4)).unwrap();
        let short: Vec<u32> = vec![2, 3, 9, 9];
        let short_mask = vec![false, false, true, true];
        let long: Vec<u32> = vec![2, 3, 2, 3, 9, 9];
        let long_mask = vec![false, false, false, false, true, true];
        let a = m.masked_loss(&[(&short, &short_mask)], 0).unwrap();
        let b = m.masked_loss(&[(&long, &long_mask)], 0).unwrap();
        assert!(a.is_finite() && b.is_finite());
        // Two unmasked targets in both cases.
        assert!(a > 0.0 && b > 0.0);
    }
}
