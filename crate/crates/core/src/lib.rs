//! sclm-core: a desk-scale laboratory for studying catastrophic forgetting in
//! continually fine-tuned causal language models, with depth-stacking model
//! growth.
//!
//! The crate is organized around six subsystems:
//! - [`numerics`]: tensors, reverse-mode autodiff, Adam, LR schedules
//! - [`model`]: a tiny decoder-only transformer with a bit-exact checkpoint format
//! - [`growth`]: the depth-wise layer-stacking growth operator
//! - [`corpus`]: byte tokenizer, instruction templating, synthetic tasks and suites
//! - [`metrics`]: BLEU / ROUGE / SARI, choice accuracy, bias percentage, forgetting
//! - [`harness`]: experiment orchestration, reports, and the CLI entry points

pub mod corpus;
pub mod growth;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod numerics;

pub use growth::{GrowthMode, GrowthSpec};
pub use model::{ModelConfig, TransformerModel};
pub use numerics::{ScheduleKind, ScheduleSpec, Tensor};
