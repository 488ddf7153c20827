//! Training-side wrapper: parameters as persistent graph leaves.
//!
//! A `TrainableModel` is created from a `TransformerModel`, accumulates
//! gradients across `loss().backward()` calls, and is written back with
//! `export`. Leaves are `Rc`-based, so a trainable model stays on one thread.

use super::batch::build_batch;
use super::net::{GraphParams, TransformerModel};
use super::ModelError;
use crate::numerics::tensor::Tensor;

pub struct TrainableModel {
    graph: GraphParams,
    named: Vec<(String, Tensor)>,
}

impl TrainableModel {
    pub fn new(model: &TransformerModel) -> Self {
        let graph = GraphParams::leaves(model);
        let mut named = vec![("tok_emb".to_string(), graph.tok_emb.clone())];
        for (i, l) in graph.layers.iter().enumerate() {
            named.push((format!("layers.{i}.attn_norm"), l.attn_norm.clone()));
            named.push((format!("layers.{i}.wq"), l.wq.clone()));
            named.push((format!("layers.{i}.wk"), l.wk.clone()));
            named.push((format!("layers.{i}.wv"), l.wv.clone()));
            named.push((format!("layers.{i}.wo"), l.wo.clone()));
            named.push((format!("layers.{i}.ffn_norm"), l.ffn_norm.clone()));
            named.push((format!("layers.{i}.w_gate"), l.w_gate.clone()));
            named.push((format!("layers.{i}.w_up"), l.w_up.clone()));
            named.push((format!("layers.{i}.w_down"), l.w_down.clone()));
        }
        named.push(("final_norm".to_string(), graph.final_norm.clone()));
        named.push(("head".to_string(), graph.head.clone()));
        TrainableModel { graph, named }
    }

    /// Graph loss over a batch of masked sequences; call `.backward()` on the
    /// result to accumulate gradients into the leaves.
    pub fn loss(&self, seqs: &[(&[u32], &[bool])], pad_id: u32) -> Result<Tensor, ModelError> {
        let c = &self.graph.config;
        let built = build_batch(seqs, pad_id, c.vocab_size, c.max_seq_len)?;
        self.graph.loss(&built)
    }

    /// Leaves in canonical parameter order.
    pub fn params(&self) -> &[(String, Tensor)] {
        &self.named
    }

    pub fn zero_grads(&self) {
        for (_, t) in &self.named {
            t.zero_grad();
        }
    }

    /// Gradients in canonical order; zeros where a leaf never received one.
    pub fn grads(&self) -> Vec<Vec<f32>> {
        self.named
            .iter()
            .map(|(_, t)| t.grad().unwrap_or_else(|| vec![0.0; t.numel()]))
            .collect()
    }

    /// Writes current leaf values back into a plain model.
    pub fn export_into(&self, model: &mut TransformerModel) {
        let mut iter = self.named.iter();
        model.visit_params_mut(|name, data| {
            let (leaf_name, leaf) = iter.next().expect("parameter count mismatch");
            debug_assert_eq!(leaf_name, name);
            data.copy_from_slice(&leaf.borrow().data);
        });
    }

    /// Overwrites leaf values (used when loading a checkpoint mid-run).
    pub fn import_from(&self, model: &TransformerModel) {
        let mut iter = self.named.iter();
        model.visit_params(|name, data| {
            let (leaf_name, leaf) = iter.next().expect("parameter count mismatch");
            debug_assert_eq!(leaf_name, name);
            leaf.set_data(data);
        });
    }
}
