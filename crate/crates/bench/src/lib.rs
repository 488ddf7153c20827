//! Benchmark fixtures shared by the criterion targets.

use sclm_core::model::TransformerModel;
use sclm_core::ModelConfig;

/// The desk-scale model shape used across benchmarks.
pub fn desk_model(n_layers: usize) -> TransformerModel {
    TransformerModel::init(ModelConfig {
        vocab_size: 259,
        d_model: 64,
        n_heads: 4,
        n_layers,
        d_ff: 256,
        max_seq_len: 384,
        norm_eps: 1e-5,
        seed: 1234,
    })
    .expect("valid benchmark config")
}

/// A deterministic pseudo-text token sequence of the given length.
pub fn sample_tokens(len: usize) -> Vec<u32> {
    (0..len).map(|i| (i * 97 + 13) as u32 % 256).collect()
}
