//! Depth-wise growth by layer stacking.
//!
//! A trained model is enlarged by repeating its transformer blocks; token
//! embeddings, the final norm, and the output head are copied once. Copies
//! are deep, so grown layers diverge independently under further training.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GrowthEvent, TransformerModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "span")]
pub enum GrowthMode {
    /// The whole block sequence [B0..B_{L-1}] is repeated g times.
    Full,
    /// A centered contiguous span is repeated g times in place; for an odd
    /// overhang the span starts one layer earlier.
    Middle(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthSpec {
    pub factor: u32,
    #[serde(flatten)]
    pub mode: GrowthMode,
}

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("growth factor must be at least 1")]
    ZeroFactor,
    #[error("middle-span {span} invalid for a model with {layers} layers")]
    InvalidSpan { span: usize, layers: usize },
}

impl GrowthSpec {
    pub fn full(factor: u32) -> Self {
        GrowthSpec {
            factor,
            mode: GrowthMode::Full,
        }
    }

    pub fn middle(factor: u32, span: usize) -> Self {
        GrowthSpec {
            factor,
            mode: GrowthMode::Middle(span),
        }
    }

    /// Index of the source layer feeding each grown layer.
    pub fn layer_sources(&self, n_layers: usize) -> Result<Vec<usize>, GrowthError> {
        if self.factor == 0 {
            return Err(GrowthError::ZeroFactor);
        }
        let g = self.factor as usize;
        match self.mode {
            GrowthMode::Full => {
                let mut order = Vec::with_capacity(g * n_layers);
                for _ in 0..g {
                    order.extend(0..n_layers);
                }
                Ok(order)
            }
            GrowthMode::Middle(span) => {
                if span == 0 || span > n_layers {
                    return Err(GrowthError::InvalidSpan {
                        span,
                        layers: n_layers,
                    });
                }
                let start = (n_layers - span) / 2;
                let mut order = Vec::with_capacity(n_layers + (g - 1) * span);
                order.extend(0..start);
                for _ in 0..g {
                    order.extend(start..start + span);
                }
                order.extend(start + span..n_layers);
                Ok(order)
            }
        }
    }

    pub fn grown_depth(&self, n_layers: usize) -> Result<usize, GrowthError> {
        Ok(self.layer_sources(n_layers)?.len())
    }

    fn mode_name(&self) -> String {
        match self.mode {
            GrowthMode::Full => "full".to_string(),
            GrowthMode::Middle(span) => format!("middle({span})"),
        }
    }
}

/// Grows `model` per `spec` without mutating it. The result records a
/// growth event (factor, mode, source depth, per-layer source map) in its
/// provenance.
pub fn stack_grow(model: &TransformerModel, spec: &GrowthSpec) -> Result<TransformerModel, GrowthError> {
    let sources = spec.layer_sources(model.config.n_layers)?;
    let layers = sources.iter().map(|&s| model.layers[s].clone()).collect();
    let mut config = model.config;
    config.n_layers = sources.len();
    let mut provenance = model.provenance.clone();
    provenance.growth.push(GrowthEvent {
        factor: spec.factor,
        mode: spec.mode_name(),
        span: match spec.mode {
            GrowthMode::Full => None,
            GrowthMode::Middle(span) => Some(span),
        },
        source_depth: model.config.n_layers,
        layer_sources: sources,
    });
    Ok(TransformerModel {
        config,
        tok_emb: model.tok_emb.clone(),
        layers,
        final_norm: model.final_norm.clone(),
        head: model.head.clone(),
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn model(n_layers: usize, seed: u64) -> TransformerModel {
        TransformerModel::init(ModelConfig {
            vocab_size: 19,
            d_model: 8,
            n_heads: 2,
            n_layers,
            d_ff: 16,
            max_seq_len: 24,
            norm_eps: 1e-5,
            seed,
        })
        .unwrap()
    }

    fn bits(v: &[f32]) -> Vec<u32> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    #[test]
    fn identity_growth_matches_source_logits_bitwise() {
        let m = model(2, 40);
        for spec in [GrowthSpec::full(1), GrowthSpec::middle(1, 2)] {
            let grown = stack_grow(&m, &spec).unwrap();
            assert_eq!(grown.config.n_layers, 2);
            let tokens = [3u32, 11, 7, 0, 18];
            let a = m.forward(&tokens).unwrap();
            let b = grown.forward(&tokens).unwrap();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn full_mode_repeats_whole_sequence() {
        let m = model(2, 41);
        let grown = stack_grow(&m, &GrowthSpec::full(2)).unwrap();
        assert_eq!(grown.config.n_layers, 4);
        assert_eq!(bits(&grown.layers[2].wq), bits(&m.layers[0].wq));
        assert_eq!(bits(&grown.layers[3].wq), bits(&m.layers[1].wq));
        assert_eq!(
            grown.provenance.growth[0].layer_sources,
            vec![0, 1, 0, 1]
        );
        // Non-embedding transformer-block parameter count exactly doubles.
        let grown_block = grown.config.n_layers * grown.block_param_count();
        let src_block = m.config.n_layers * m.block_param_count();
        assert_eq!(grown_block, 2 * src_block);
    }

    #[test]
    fn parameter_count_arithmetic_is_exact() {
        let m = model(3, 42);
        for spec in [GrowthSpec::full(2), GrowthSpec::full(4), GrowthSpec::middle(3, 1)] {
            let grown = stack_grow(&m, &spec).unwrap();
            let shared = m.config.vocab_size * m.config.d_model * 2 + m.config.d_model;
            assert_eq!(
                grown.param_count(),
                shared + grown.config.n_layers * grown.block_param_count()
            );
        }
    }

    #[test]
    fn middle_mode_centers_span_with_earlier_bias() {
        // 5 layers, span 2: overhang 3 so the span starts at layer 1.
        let spec = GrowthSpec::middle(3, 2);
        let sources = spec.layer_sources(5).unwrap();
        assert_eq!(sources, vec![0, 1, 2, 1, 2, 1, 2, 3, 4]);
        // 4 layers, span 1: overhang 3, span starts at layer 1.
        let spec = GrowthSpec::middle(2, 1);
        assert_eq!(spec.layer_sources(4).unwrap(), vec![0, 1, 1, 2, 3]);
    }

    #[test]
    fn invalid_span_is_a_config_error() {
        let spec = GrowthSpec::middle(2, 5);
        assert!(matches!(
            spec.layer_sources(3),
            Err(GrowthError::InvalidSpan { span: 5, layers: 3 })
        ));
        assert!(matches!(
            GrowthSpec::middle(2, 0).layer_sources(3),
            Err(GrowthError::InvalidSpan { .. })
        ));
    }

    #[test]
    fn growth_does_not_mutate_source_and_copies_are_deep() {
        let m = model(2, 43);
        let before = bits(&m.layers[0].wq);
        let mut grown = stack_grow(&m, &GrowthSpec::full(2)).unwrap();
        grown.layers[0].wq[0] += 1.0;
        assert_eq!(bits(&m.layers[0].wq), before);
        assert_ne!(bits(&grown.layers[0].wq), bits(&grown.layers[2].wq));
    }

    #[test]
    fn layer_provenance_equality_holds_at_growth_time() {
        let m = model(3, 44);
        let grown = stack_grow(&m, &GrowthSpec::full(4)).unwrap();
        let event = grown.provenance.growth.last().unwrap();
        assert_eq!(event.source_depth, 3);
        assert_eq!(event.factor, 4);
        for (l, &src) in event.layer_sources.iter().enumerate() {
            assert_eq!(bits(&grown.layers[l].wv), bits(&m.layers[src].wv));
            assert_eq!(bits(&grown.layers[l].w_down), bits(&m.layers[src].w_down));
        }
    }
}
