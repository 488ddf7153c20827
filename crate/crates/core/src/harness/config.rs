//! Experiment configuration: model, growth, budgets, ordered task list,
//! evaluation suites, seeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Category, TaskKind};
use crate::growth::GrowthSpec;
use crate::model::ModelConfig;
use crate::numerics::{ScheduleSpec};

use super::HarnessError;

/// Reference fine-tuning constants for the two shipped training regimes.
pub const DEFAULT_BASE_LR: f64 = 2e-5;
pub const REGULARIZED_WEIGHT_DECAY: f32 = 0.01;
pub const REFERENCE_WARMUP_STEPS: u64 = 100;
/// Warmup fraction used when a regularized task does not pin warmup steps.
pub const DEFAULT_WARMUP_FRACTION: f64 = 0.085;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Scratch,
    Stack,
}

impl Arm {
    pub fn label(&self) -> &'static str {
        match self {
            Arm::Scratch => "scratch",
            Arm::Stack => "stack",
        }
    }
}

/// The two fine-tuning regimes: a constant learning rate with no warmup and
/// no decay, and a regularized regime with cosine decay, warmup, and weight
/// decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainPreset {
    Constant,
    Regularized,
}

impl TrainPreset {
    pub fn weight_decay(&self) -> f32 {
        match self {
            TrainPreset::Constant => 0.0,
            TrainPreset::Regularized => REGULARIZED_WEIGHT_DECAY,
        }
    }

    /// Materializes the schedule for a task of `total_steps` optimizer steps.
    pub fn schedule(&self, base_lr: f64, warmup_steps: Option<u64>, total_steps: u64) -> ScheduleSpec {
        match self {
            TrainPreset::Constant => ScheduleSpec::constant(base_lr, total_steps),
            TrainPreset::Regularized => {
                let warmup = warmup_steps.unwrap_or_else(|| {
                    ((total_steps as f64 * DEFAULT_WARMUP_FRACTION).round() as u64).min(total_steps)
                });
                ScheduleSpec::cosine(base_lr, warmup, total_steps, 0.1 * base_lr)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSource {
    Synthetic {
        kind: TaskKind,
        n_train: usize,
        n_test: usize,
    },
    Jsonl {
        train: PathBuf,
        test: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub name: String,
    pub source: TaskSource,
    pub epochs: usize,
    pub batch_size: usize,
    pub grad_accum: usize,
    pub preset: TrainPreset,
    pub base_lr: f64,
    /// Explicit warmup step count; regularized tasks default to a fraction
    /// of total steps when absent.
    pub warmup_steps: Option<u64>,
    pub max_samples: usize,
    /// Greedy decoding budget for the inference metric table.
    pub gen_max_new: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub category: Category,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteSource {
    Builtin,
    Files(Vec<SuiteEntry>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    /// Token budget for the small model (the growth arm's first stage).
    pub small_budget_tokens: usize,
    /// Continuation budget after growth.
    pub grown_budget_tokens: usize,
    /// Budget for the from-scratch arm (the full-depth counterpart).
    pub scratch_budget_tokens: usize,
    pub batch_size: usize,
    /// Tokens per training window.
    pub window: usize,
    pub base_lr: f64,
    pub warmup_steps: u64,
    pub weight_decay: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub growth: GrowthSpec,
    pub pretrain: PretrainConfig,
    pub tasks: Vec<TaskConfig>,
    pub suites: SuiteSource,
    pub seed: u64,
    /// Steps between train-loss log points.
    pub log_interval: u64,
    /// Output directory; a CLI concern, never part of report snapshots.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The default desk-scale two-arm experiment: a 2-layer model grown x2,
    /// three synthetic tasks of three epochs each, bundled suites.
    pub fn desk_default(seed: u64) -> Self {
        let model = ModelConfig {
            vocab_size: crate::corpus::VOCAB_SIZE,
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            d_ff: 256,
            max_seq_len: 384,
            norm_eps: 1e-5,
            seed,
        };
        let task = |name: &str, kind: TaskKind, preset: TrainPreset, grad_accum: usize| TaskConfig {
            name: name.to_string(),
            source: TaskSource::Synthetic {
                kind,
                n_train: 120,
                n_test: 10,
            },
            epochs: 3,
            batch_size: 8,
            grad_accum,
            preset,
            base_lr: 3e-4,
            warmup_steps: None,
            max_samples: 10_000,
            gen_max_new: 40,
        };
        ExperimentConfig {
            model,
            growth: GrowthSpec::full(2),
            pretrain: PretrainConfig {
                small_budget_tokens: 300_000,
                grown_budget_tokens: 900_000,
                scratch_budget_tokens: 900_000,
                batch_size: 8,
                window: 256,
                base_lr: 1e-3,
                warmup_steps: 40,
                weight_decay: 0.0,
            },
            tasks: vec![
                task("simplify", TaskKind::Simplify, TrainPreset::Constant, 1),
                task("dialogue", TaskKind::Dialogue, TrainPreset::Constant, 1),
                task("question", TaskKind::Question, TrainPreset::Regularized, 2),
            ],
            suites: SuiteSource::Builtin,
            seed,
            log_interval: 10,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.growth
            .layer_sources(self.model.n_layers)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let p = &self.pretrain;
        if p.small_budget_tokens == 0 || p.scratch_budget_tokens == 0 {
            return Err(HarnessError::Config(
                "pretraining budgets must be positive".to_string(),
            ));
        }
        if p.batch_size == 0 || p.window < 2 {
            return Err(HarnessError::Config(
                "pretrain batch_size must be >= 1 and window >= 2".to_string(),
            ));
        }
        if p.window >= self.model.max_seq_len {
            return Err(HarnessError::Config(format!(
                "pretrain window {} must leave room for the anchor token within max_seq_len {}",
                p.window, self.model.max_seq_len
            )));
        }
        if p.base_lr <= 0.0 {
            return Err(HarnessError::Config("pretrain base_lr must be positive".to_string()));
        }
        if self.tasks.is_empty() {
            return Err(HarnessError::Config("task list is empty".to_string()));
        }
        let mut names = std::collections::HashSet::new();
        for t in &self.tasks {
            if !names.insert(&t.name) {
                return Err(HarnessError::Config(format!("duplicate task name '{}'", t.name)));
            }
            if t.epochs == 0 || t.batch_size == 0 || t.grad_accum == 0 {
                return Err(HarnessError::Config(format!(
                    "task '{}': epochs, batch_size, grad_accum must be >= 1",
                    t.name
                )));
            }
            if t.base_lr <= 0.0 {
                return Err(HarnessError::Config(format!(
                    "task '{}': base_lr must be positive",
                    t.name
                )));
            }
            if t.max_samples == 0 {
                return Err(HarnessError::Config(format!(
                    "task '{}': max_samples must be >= 1",
                    t.name
                )));
            }
            if let TaskSource::Synthetic { n_train, n_test, .. } = &t.source {
                if *n_train == 0 || *n_test == 0 {
                    return Err(HarnessError::Config(format!(
                        "task '{}': synthetic splits must be non-empty",
                        t.name
                    )));
                }
            }
            if let TaskSource::Jsonl { train, test } = &t.source {
                for path in [train, test] {
                    if !path.exists() {
                        return Err(HarnessError::Config(format!(
                            "task '{}': file {} does not exist",
                            t.name,
                            path.display()
                        )));
                    }
                }
            }
        }
        if let SuiteSource::Files(entries) = &self.suites {
            if entries.is_empty() {
                return Err(HarnessError::Config("suite list is empty".to_string()));
            }
            for e in entries {
                if !e.path.exists() {
                    return Err(HarnessError::Config(format!(
                        "suite '{}': file {} does not exist",
                        e.name,
                        e.path.display()
                    )));
                }
            }
        }
        if self.log_interval == 0 {
            return Err(HarnessError::Config("log_interval must be >= 1".to_string()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }
}

/// Deterministic sub-seed derivation (FNV-1a over the domain string, mixed
/// with the base seed).
pub fn derive_seed(base: u64, domain: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ base.rotate_left(17);
    for b in domain.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        ExperimentConfig::desk_default(42).validate().unwrap();
    }

    #[test]
    fn zero_budget_rejected_at_validation() {
        let mut cfg = ExperimentConfig::desk_default(42);
        cfg.pretrain.small_budget_tokens = 0;
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn missing_task_file_rejected() {
        let mut cfg = ExperimentConfig::desk_default(42);
        cfg.tasks[0].source = TaskSource::Jsonl {
            train: PathBuf::from("/nonexistent/train.jsonl"),
            test: PathBuf::from("/nonexistent/test.jsonl"),
        };
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::desk_default(7);
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        // out_dir is never serialized
        assert!(!json.contains("out_dir"));
    }

    #[test]
    fn preset_schedules_match_regimes() {
        let s = TrainPreset::Constant.schedule(DEFAULT_BASE_LR, None, 100);
        assert_eq!(s.kind, crate::numerics::ScheduleKind::Constant);
        assert_eq!(s.base_lr, 2e-5);
        assert_eq!(TrainPreset::Constant.weight_decay(), 0.0);
        let s = TrainPreset::Regularized.schedule(DEFAULT_BASE_LR, Some(REFERENCE_WARMUP_STEPS), 1000);
        assert_eq!(s.kind, crate::numerics::ScheduleKind::Cosine);
        assert_eq!(s.warmup_steps, 100);
        assert_eq!(TrainPreset::Regularized.weight_decay(), 0.01);
        // Fraction default: 8.5% of total steps.
        let s = TrainPreset::Regularized.schedule(3e-4, None, 200);
        assert_eq!(s.warmup_steps, 17);
    }

    #[test]
    fn derive_seed_is_stable_and_domain_sensitive() {
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    }
}
