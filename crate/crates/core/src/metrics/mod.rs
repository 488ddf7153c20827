//! Scoring: text-generation metrics (BLEU, ROUGE, SARI), likelihood-based
//! choice accuracy and bias percentage, and the forgetting metric.

mod forgetting;
mod scoring;
pub mod text;

pub use forgetting::{fg, CategoryResult, FgEntry, FgReport, TaskScores};
pub use scoring::{bias_percentage, choice_accuracy, SuiteScore};
pub use text::{bleu, rouge_l, rouge_n, sari, tokenize};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("suite '{0}' is empty")]
    EmptySuite(String),
    #[error("suite '{suite}' holds the wrong item kind (expected {expected})")]
    WrongSuiteKind { suite: String, expected: &'static str },
    #[error("every item in suite '{suite}' was skipped")]
    AllItemsSkipped { suite: String },
    #[error("baseline score for task '{task}' is zero; forgetting ratio undefined")]
    InvalidBaseline { task: String },
    #[error("invalid scores: {0}")]
    InvalidScores(String),
    #[error("SARI requires a non-empty source")]
    EmptySource,
    #[error("at least one reference is required")]
    NoReferences,
    #[error(transparent)]
    Model(#[from] ModelError),
}
