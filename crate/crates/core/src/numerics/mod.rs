//! Deterministic tensor arithmetic with reverse-mode autodiff, the Adam
//! optimizer, and learning-rate schedules.
//!
//! Training state is 32-bit; reductions may accumulate in 64-bit for
//! stability. All computation is deterministic: the same inputs produce
//! bit-identical outputs regardless of thread count.

pub mod adam;
pub mod kernels;
pub mod ops;
pub mod schedule;
pub mod tensor;

pub use adam::{AdamConfig, OptimizerState};
pub use schedule::{lr_at, ScheduleKind, ScheduleSpec};
pub use tensor::{no_grad, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarBackward { shape: Vec<usize> },
    #[error("non-finite gradient in parameter '{param}'")]
    NonFiniteGradient { param: String },
    #[error("schedule step {step} exceeds total_steps {total}")]
    StepOutOfRange { step: u64, total: u64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}
