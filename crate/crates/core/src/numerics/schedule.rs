//! Learning-rate schedules: constant, and cosine decay with linear warmup.

use serde::{Deserialize, Serialize};

use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Cosine,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    pub warmup_steps: u64,
    pub total_steps: u64,
    pub min_lr: f64,
}

impl ScheduleSpec {
    pub fn constant(base_lr: f64, total_steps: u64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Constant,
            base_lr,
            warmup_steps: 0,
            total_steps,
            min_lr: base_lr,
        }
    }

    pub fn cosine(base_lr: f64, warmup_steps: u64, total_steps: u64, min_lr: f64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Cosine,
            base_lr,
            warmup_steps,
            total_steps,
            min_lr,
        }
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if self.base_lr <= 0.0 {
            return Err(NumericsError::InvalidSchedule(format!(
                "base_lr must be positive, got {}",
                self.base_lr
            )));
        }
        if self.total_steps == 0 {
            return Err(NumericsError::InvalidSchedule(
                "total_steps must be positive".to_string(),
            ));
        }
        if self.warmup_steps > self.total_steps {
            return Err(NumericsError::InvalidSchedule(format!(
                "warmup_steps {} exceeds total_steps {}",
                self.warmup_steps, self.total_steps
            )));
        }
        if self.min_lr < 0.0 || self.min_lr > self.base_lr {
            return Err(NumericsError::InvalidSchedule(format!(
                "min_lr {} must lie in [0, base_lr = {}]",
                self.min_lr, self.base_lr
            )));
        }
        Ok(())
    }
}

/// Learning rate at `step`. Constant schedules return `base_lr` everywhere;
/// cosine schedules ramp linearly 0 → base_lr over the warmup, then decay to
/// `min_lr` at `total_steps`.
pub fn lr_at(step: u64, spec: &ScheduleSpec) -> Result<f64, NumericsError> {
    if step > spec.total_steps {
        return Err(NumericsError::StepOutOfRange {
            step,
            total: spec.total_steps,
        });
    }
    match spec.kind {
        ScheduleKind::Constant => Ok(spec.base_lr),
        ScheduleKind::Cosine => {
            if step < spec.warmup_steps {
                return Ok(spec.base_lr * step as f64 / spec.warmup_steps as f64);
            }
            let denom = (spec.total_steps - spec.warmup_steps).max(1);
            let p = (step - spec.warmup_steps) as f64 / denom as f64;
            Ok(spec.min_lr
                + 0.5 * (spec.base_lr - spec.min_lr) * (1.0 + (std::f64::consts::PI * p).cos()))
        }
    }
}
