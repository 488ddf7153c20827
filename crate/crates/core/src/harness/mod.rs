//! Experiment orchestration: pretraining, growth, sequential fine-tuning,
//! evaluation sweeps, forgetting reports, and the file outputs behind the CLI.

mod config;
mod experiment;
mod registry;
mod report;
mod stages;
mod trainer;

pub use config::{
    derive_seed, Arm, ExperimentConfig, PretrainConfig, SuiteEntry, SuiteSource, TaskConfig,
    TaskSource, TrainPreset, DEFAULT_BASE_LR, REGULARIZED_WEIGHT_DECAY, REFERENCE_WARMUP_STEPS,
};
pub use experiment::{run_experiment, ArmReport, RunReport};
pub use registry::{CheckpointEntry, CheckpointRegistry};
pub use report::{emit_report, load_report, InferenceRow, LossPoint};
pub use stages::{evaluate_all, finetune_sequential, grow_and_continue, pretrain, EvalColumn};
pub use trainer::TrainStats;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::growth::GrowthError;
use crate::metrics::MetricsError;
use crate::model::{CheckpointError, ModelError};
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn in_stage(stage: &str) -> impl FnOnce(HarnessError) -> HarnessError + '_ {
        move |source| HarnessError::Stage {
            stage: stage.to_string(),
            source: Box::new(source),
        }
    }

    /// CLI exit code: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data(_) | HarnessError::Io { .. } => 3,
            HarnessError::Numeric(_) => 4,
            HarnessError::Stage { source, .. } => source.exit_code(),
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        match &e {
            ModelError::InvalidConfig(_) => HarnessError::Config(e.to_string()),
            ModelError::Numerics(NumericsError::NonFiniteGradient { .. }) => {
                HarnessError::Numeric(e.to_string())
            }
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

impl From<NumericsError> for HarnessError {
    fn from(e: NumericsError) -> Self {
        match &e {
            NumericsError::NonFiniteGradient { .. } | NumericsError::DegenerateInput(_) => {
                HarnessError::Numeric(e.to_string())
            }
            NumericsError::InvalidSchedule(_) | NumericsError::StepOutOfRange { .. } => {
                HarnessError::Config(e.to_string())
            }
            _ => HarnessError::Numeric(e.to_string()),
        }
    }
}

impl From<CorpusError> for HarnessError {
    fn from(e: CorpusError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

impl From<GrowthError> for HarnessError {
    fn from(e: GrowthError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<MetricsError> for HarnessError {
    fn from(e: MetricsError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

impl From<CheckpointError> for HarnessError {
    fn from(e: CheckpointError) -> Self {
        HarnessError::Data(e.to_string())
    }
}
