//! Tiny decoder-only transformer in the TinyLlama style: pre-norm RMSNorm,
//! causal multi-head attention with rotary embeddings, SiLU-gated feed-forward,
//! untied output head.

mod batch;
pub mod checkpoint;
mod net;
mod train;

pub use batch::BuiltBatch;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use net::{BlockParams, TransformerModel};
pub use train::TrainableModel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

/// Rotary embedding base used by every model in this crate.
pub const ROPE_THETA: f32 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub max_seq_len: usize,
    pub norm_eps: f32,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocab_size == 0
            || self.d_model == 0
            || self.n_heads == 0
            || self.d_ff == 0
            || self.max_seq_len == 0
        {
            return Err(ModelError::InvalidConfig(
                "all dimensions must be positive".to_string(),
            ));
        }
        if self.n_layers < 1 {
            return Err(ModelError::InvalidConfig(
                "n_layers must be at least 1".to_string(),
            ));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if (self.d_model / self.n_heads) % 2 != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "head dim {} must be even for rotary embeddings",
                self.d_model / self.n_heads
            )));
        }
        if self.norm_eps <= 0.0 {
            return Err(ModelError::InvalidConfig(
                "norm_eps must be positive".to_string(),
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// Where a model came from: growth events, training stages, and the ordered
/// chain of checkpoint labels it was fine-tuned through.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub growth: Vec<GrowthEvent>,
    pub training: Vec<String>,
    pub lineage: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEvent {
    pub factor: u32,
    pub mode: String,
    pub span: Option<usize>,
    pub source_depth: usize,
    /// For every grown layer, the index of the source layer it copies.
    pub layer_sources: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenMode {
    Greedy,
    Temperature { t: f32, seed: u64 },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("token id {id} out of range for vocab {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("sequence length {len} exceeds max_seq_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("degenerate batch: no unmasked target positions")]
    DegenerateBatch,
    #[error("sequence scoring requires a non-empty continuation")]
    EmptyContinuation,
    #[error("sequence scoring requires a non-empty prompt (anchor the sequence start)")]
    EmptyPrompt,
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
