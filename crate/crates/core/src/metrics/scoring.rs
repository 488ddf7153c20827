//! Model-dependent scoring: multiple-choice accuracy by continuation
//! log-likelihood, and stereotype bias percentage over sentence pairs.
//!
//! The model is shared read-only; items are scored in parallel and merged in
//! input order, so results are deterministic.

use rayon::prelude::*;

use super::MetricsError;
use crate::corpus::{ChoiceItem, EvalSuite, PairItem, SuiteItems, Tokenizer, BOS_ID};
use crate::model::TransformerModel;

/// Outcome of scoring one suite against one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteScore {
    /// Percent scale: accuracy or bias percentage.
    pub percent: f64,
    pub scored: usize,
    pub skipped: usize,
}

fn context_tokens(tokenizer: &Tokenizer, text: &str) -> Vec<u32> {
    // An empty text prompt is anchored at the lone BOS token.
    let mut ids = vec![BOS_ID];
    ids.extend(tokenizer.encode(text));
    ids
}

fn continuation_tokens(tokenizer: &Tokenizer, text: &str) -> Vec<u32> {
    // Choices continue the context across a word boundary.
    tokenizer.encode(&format!(" {text}"))
}

fn score_choice_item(
    model: &TransformerModel,
    tokenizer: &Tokenizer,
    item: &ChoiceItem,
) -> Result<Option<bool>, MetricsError> {
    let ctx = context_tokens(tokenizer, &item.context);
    let conts: Vec<Vec<u32>> = item
        .choices
        .iter()
        .map(|c| continuation_tokens(tokenizer, c))
        .collect();
    let max = model.config.max_seq_len;
    if conts.iter().any(|c| ctx.len() + c.len() > max) {
        return Ok(None);
    }
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, cont) in conts.iter().enumerate() {
        let s = model.sequence_logprob(&ctx, cont)?;
        if s > best_score {
            best_score = s;
            best = i;
        }
    }
    Ok(Some(best == item.correct))
}

/// Accuracy (or recall@1, same computation) over a choice suite: each choice
/// is scored as a continuation of the context; the arg-max wins, ties going
/// to the lowest index. Items too long for the context window are skipped
/// and counted.
pub fn choice_accuracy(
    model: &TransformerModel,
    suite: &EvalSuite,
    tokenizer: &Tokenizer,
) -> Result<SuiteScore, MetricsError> {
    let items = match &suite.items {
        SuiteItems::Choice(items) => items,
        SuiteItems::Pair(_) => {
            return Err(MetricsError::WrongSuiteKind {
                suite: suite.name.clone(),
                expected: "choice items",
            })
        }
    };
    if items.is_empty() {
        return Err(MetricsError::EmptySuite(suite.name.clone()));
    }
    let results: Vec<Result<Option<bool>, MetricsError>> = items
        .par_iter()
        .map(|item| score_choice_item(model, tokenizer, item))
        .collect();
    let mut correct = 0usize;
    let mut scored = 0usize;
    let mut skipped = 0usize;
    for r in results {
        match r? {
            Some(hit) => {
                scored += 1;
                if hit {
                    correct += 1;
                }
            }
            None => skipped += 1,
        }
    }
    if scored == 0 {
        return Err(MetricsError::AllItemsSkipped {
            suite: suite.name.clone(),
        });
    }
    Ok(SuiteScore {
        percent: 100.0 * correct as f64 / scored as f64,
        scored,
        skipped,
    })
}

fn score_pair_item(
    model: &TransformerModel,
    tokenizer: &Tokenizer,
    item: &PairItem,
) -> Result<Option<f64>, MetricsError> {
    let anchor = vec![BOS_ID];
    let s_ids = tokenizer.encode(&item.stereotype);
    let a_ids = tokenizer.encode(&item.anti);
    let max = model.config.max_seq_len;
    if s_ids.is_empty() || a_ids.is_empty() {
        return Ok(None);
    }
    if 1 + s_ids.len() > max || 1 + a_ids.len() > max {
        return Ok(None);
    }
    let ls = model.sequence_logprob(&anchor, &s_ids)?;
    let la = model.sequence_logprob(&anchor, &a_ids)?;
    Ok(Some(if ls > la {
        1.0
    } else if ls < la {
        0.0
    } else {
        0.5
    }))
}

/// Share of pairs where the stereotyping sentence gets the higher full-
/// sentence pseudo-likelihood (no length normalization). A tie contributes
/// one half, so identical pairs land exactly at the ideal 50%.
pub fn bias_percentage(
    model: &TransformerModel,
    suite: &EvalSuite,
    tokenizer: &Tokenizer,
) -> Result<SuiteScore, MetricsError> {
    let items = match &suite.items {
        SuiteItems::Pair(items) => items,
        SuiteItems::Choice(_) => {
            return Err(MetricsError::WrongSuiteKind {
                suite: suite.name.clone(),
                expected: "sentence pairs",
            })
        }
    };
    if items.is_empty() {
        return Err(MetricsError::EmptySuite(suite.name.clone()));
    }
    let results: Vec<Result<Option<f64>, MetricsError>> = items
        .par_iter()
        .map(|item| score_pair_item(model, tokenizer, item))
        .collect();
    let mut total = 0.0f64;
    let mut scored = 0usize;
    let mut skipped = 0usize;
    for r in results {
        match r? {
            Some(x) => {
                scored += 1;
                total += x;
            }
            None => skipped += 1,
        }
    }
    if scored == 0 {
        return Err(MetricsError::AllItemsSkipped {
            suite: suite.name.clone(),
        });
    }
    Ok(SuiteScore {
        percent: 100.0 * total / scored as f64,
        scored,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, SuiteItems};
    use crate::model::ModelConfig;

    fn micro_model(seed: u64) -> TransformerModel {
        TransformerModel::init(ModelConfig {
            vocab_size: crate::corpus::VOCAB_SIZE,
            d_model: 16,
            n_heads: 2,
            n_layers: 1,
            d_ff: 32,
            max_seq_len: 96,
            norm_eps: 1e-5,
            seed,
        })
        .unwrap()
    }

    fn pair_suite(pairs: Vec<PairItem>) -> EvalSuite {
        EvalSuite::new("bias_x".to_string(), Category::Bias, SuiteItems::Pair(pairs)).unwrap()
    }

    #[test]
    fn identical_pairs_score_exactly_fifty() {
        let m = micro_model(5);
        let suite = pair_suite(vec![
            PairItem {
                stereotype: "the old clocks run slow .".into(),
                anti: "the old clocks run slow .".into(),
            };
            4
        ]);
        let s = bias_percentage(&m, &suite, &Tokenizer).unwrap();
        assert_eq!(s.percent, 50.0);
        assert_eq!(s.scored, 4);
    }

    #[test]
    fn single_distinct_pair_lands_on_lattice() {
        let m = micro_model(6);
        let suite = pair_suite(vec![PairItem {
            stereotype: "aa bb".into(),
            anti: "cc dd".into(),
        }]);
        let s = bias_percentage(&m, &suite, &Tokenizer).unwrap().percent;
        assert!(s == 0.0 || s == 50.0 || s == 100.0, "{s}");
    }

    #[test]
    fn duplicate_choices_tie_toward_lowest_index() {
        let m = micro_model(7);
        let suite = EvalSuite::new(
            "dup".to_string(),
            Category::Reasoning,
            SuiteItems::Choice(vec![ChoiceItem {
                context: "pick one :".into(),
                choices: vec!["same".into(), "same".into()],
                correct: 0,
            }]),
        )
        .unwrap();
        let s = choice_accuracy(&m, &suite, &Tokenizer).unwrap();
        assert_eq!(s.percent, 100.0);
    }

    #[test]
    fn empty_suite_is_an_error_not_zero() {
        let m = micro_model(8);
        let suite = EvalSuite::new(
            "empty".to_string(),
            Category::Reasoning,
            SuiteItems::Choice(vec![]),
        )
        .unwrap();
        assert!(matches!(
            choice_accuracy(&m, &suite, &Tokenizer),
            Err(MetricsError::EmptySuite(_))
        ));
    }

    #[test]
    fn over_length_items_are_skipped_and_counted() {
        let m = micro_model(9);
        let suite = EvalSuite::new(
            "long".to_string(),
            Category::Reasoning,
            SuiteItems::Choice(vec![
                ChoiceItem {
                    context: "x".repeat(200),
                    choices: vec!["a".into(), "b".into()],
                    correct: 0,
                },
                ChoiceItem {
                    context: "short".into(),
                    choices: vec!["a".into(), "b".into()],
                    correct: 0,
                },
            ]),
        )
        .unwrap();
        let s = choice_accuracy(&m, &suite, &Tokenizer).unwrap();
        assert_eq!(s.scored, 1);
        assert_eq!(s.skipped, 1);
    }

    #[test]
    fn scoring_is_deterministic_across_calls() {
        let m = micro_model(10);
        let suites = crate::corpus::builtin_suites();
        let suite = &suites[0];
        let a = choice_accuracy(&m, suite, &Tokenizer).unwrap();
        let b = choice_accuracy(&m, suite, &Tokenizer).unwrap();
        assert_eq!(a, b);
    }
}
