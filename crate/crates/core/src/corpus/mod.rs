//! Data layer: byte tokenizer, instruction templating with response-only
//! loss masks, synthetic continual tasks, the pretraining stream, bundled
//! miniature evaluation suites, and JSONL loaders for external data.

pub mod facts;
mod jsonl;
mod pretrain;
mod suites;
mod synth;
mod template;
mod tokenizer;

pub use jsonl::{
    load_suite_jsonl, load_task_samples_jsonl, task_from_jsonl, write_suite_jsonl,
    write_task_jsonl, LineError, Loaded,
};
pub use pretrain::{make_pretrain_corpus, PretrainCorpus, BIAS_SKEW};
pub use suites::builtin_suites;
pub use synth::{gen_synthetic_task, TaskKind};
pub use template::{apply_template, render_prompt, PREAMBLE, RESPONSE_MARKER, TEMPLATE_ID};
pub use tokenizer::{Tokenizer, BOS_ID, EOS_ID, PAD_ID, VOCAB_SIZE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One instruction-tuning sample: task text, optional context, gold output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstructionSample {
    pub instruction: String,
    #[serde(default)]
    pub input: String,
    pub output: String,
}

/// An ordered continual-learning task: what the model trains on at one stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub train: Vec<InstructionSample>,
    pub test: Vec<InstructionSample>,
    pub max_samples: usize,
    pub template_id: String,
}

impl TaskSpec {
    pub fn new(
        name: String,
        mut train: Vec<InstructionSample>,
        test: Vec<InstructionSample>,
        max_samples: usize,
    ) -> Result<Self, CorpusError> {
        if let Some(bad) = train.iter().position(|s| s.output.is_empty()) {
            return Err(CorpusError::InvalidRecord(format!(
                "training sample {bad} has an empty output"
            )));
        }
        train.truncate(max_samples);
        for t in &test {
            if train.contains(t) {
                return Err(CorpusError::InvalidRecord(format!(
                    "train/test overlap on sample with instruction '{}'",
                    t.instruction
                )));
            }
        }
        Ok(TaskSpec {
            name,
            train,
            test,
            max_samples,
            template_id: TEMPLATE_ID.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    DomainKnowledge,
    Reasoning,
    ReadingComprehension,
    Bias,
}

impl Category {
    pub fn label(&self) -> &'static str {
        match self {
            Category::DomainKnowledge => "domain_knowledge",
            Category::Reasoning => "reasoning",
            Category::ReadingComprehension => "reading_comprehension",
            Category::Bias => "bias",
        }
    }
}

/// Multiple-choice item scored by continuation log-likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceItem {
    pub context: String,
    pub choices: Vec<String>,
    pub correct: usize,
}

/// Sentence pair for stereotype scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairItem {
    pub stereotype: String,
    pub anti: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SuiteItems {
    Choice(Vec<ChoiceItem>),
    Pair(Vec<PairItem>),
}

/// One evaluation task: a named set of items under one capability category.
/// Bias suites hold sentence pairs; every other category holds choice items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSuite {
    pub name: String,
    pub category: Category,
    pub items: SuiteItems,
}

impl EvalSuite {
    pub fn new(name: String, category: Category, items: SuiteItems) -> Result<Self, CorpusError> {
        match (&category, &items) {
            (Category::Bias, SuiteItems::Pair(_)) => {}
            (Category::Bias, SuiteItems::Choice(_)) => {
                return Err(CorpusError::InvalidRecord(format!(
                    "bias suite '{name}' must contain sentence pairs"
                )))
            }
            (_, SuiteItems::Pair(_)) => {
                return Err(CorpusError::InvalidRecord(format!(
                    "non-bias suite '{name}' must contain choice items"
                )))
            }
            (_, SuiteItems::Choice(items)) => {
                for (i, item) in items.iter().enumerate() {
                    if item.choices.len() < 2 {
                        return Err(CorpusError::InvalidRecord(format!(
                            "choice item {i} in '{name}' has fewer than 2 choices"
                        )));
                    }
                    if item.correct >= item.choices.len() {
                        return Err(CorpusError::InvalidRecord(format!(
                            "choice item {i} in '{name}' has correct index {} out of range",
                            item.correct
                        )));
                    }
                }
            }
        }
        Ok(EvalSuite {
            name,
            category,
            items,
        })
    }

    pub fn len(&self) -> usize {
        match &self.items {
            SuiteItems::Choice(v) => v.len(),
            SuiteItems::Pair(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reporting label: recall@1 for ranking-style suites, accuracy for other
    /// choice suites, bias percentage for pair suites. The computation behind
    /// recall@1 and accuracy is identical; the alias follows the suite name.
    pub fn metric_label(&self) -> &'static str {
        match self.category {
            Category::Bias => "bias_percentage",
            _ if self.name.starts_with("mutual") => "recall_at_1",
            _ => "accuracy",
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown token id {0}")]
    UnknownTokenId(u32),
    #[error("rendered sample of {rendered} tokens exceeds max_seq_len {max}")]
    SampleTooLong { rendered: usize, max: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: no usable records after filtering ({errors} malformed lines)")]
    EmptyAfterFiltering { path: String, errors: usize },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}
