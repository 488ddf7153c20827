//! The forgetting metric: mean relative performance drop from the
//! pre-fine-tuning baseline, averaged over fine-tuning steps and then over
//! the evaluation tasks of a category. Negative values mean improvement.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::corpus::Category;

/// Scores for one evaluation task: baseline R_o before continual fine-tuning
/// and R_1..R_N after each task, all on the percent scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub task: String,
    pub baseline: f64,
    pub after: Vec<f64>,
}

/// Per-category inputs to the forgetting metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub category: Category,
    pub tasks: Vec<TaskScores>,
}

/// One category's forgetting value with its per-task breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgEntry {
    pub category: Category,
    pub value: f64,
    pub per_task: Vec<(String, f64)>,
    pub n_steps: usize,
}

/// Full report across categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgReport {
    pub entries: Vec<FgEntry>,
}

/// FG for one category:
/// FG = (1/|E|) Σ_e (1/N) Σ_m (R_o − R_m) / R_o × 100.
pub fn fg(result: &CategoryResult) -> Result<FgEntry, MetricsError> {
    if result.tasks.is_empty() {
        return Err(MetricsError::InvalidScores(format!(
            "category {:?} has no evaluation tasks",
            result.category
        )));
    }
    let n_steps = result.tasks[0].after.len();
    if n_steps == 0 {
        return Err(MetricsError::InvalidScores(
            "need at least one post-task score".to_string(),
        ));
    }
    let mut per_task = Vec::with_capacity(result.tasks.len());
    let mut total = 0.0f64;
    for t in &result.tasks {
        if t.after.len() != n_steps {
            return Err(MetricsError::InvalidScores(format!(
                "task '{}' has {} scores, expected {}",
                t.task,
                t.after.len(),
                n_steps
            )));
        }
        for &score in std::iter::once(&t.baseline).chain(&t.after) {
            if !(0.0..=100.0).contains(&score) {
                return Err(MetricsError::InvalidScores(format!(
                    "task '{}' score {score} outside [0, 100]",
                    t.task
                )));
            }
        }
        if t.baseline == 0.0 {
            return Err(MetricsError::InvalidBaseline {
                task: t.task.clone(),
            });
        }
        let mut acc = 0.0f64;
        for &rm in &t.after {
            acc += (t.baseline - rm) / t.baseline;
        }
        let task_fg = acc / n_steps as f64 * 100.0;
        per_task.push((t.task.clone(), task_fg));
        total += task_fg;
    }
    Ok(FgEntry {
        category: result.category,
        value: total / result.tasks.len() as f64,
        per_task,
        n_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(category: Category, baseline: f64, after: &[f64]) -> CategoryResult {
        CategoryResult {
            category,
            tasks: vec![TaskScores {
                task: "t".to_string(),
                baseline,
                after: after.to_vec(),
            }],
        }
    }

    #[test]
    fn literal_formula_on_reference_rows() {
        // Values computed longhand from the formula itself.
        let e = fg(&single(
            Category::ReadingComprehension,
            37.1,
            &[32.5, 34.2, 31.4],
        ))
        .unwrap();
        let expect = (4.6 + 2.9 + 5.7) / 37.1 / 3.0 * 100.0;
        assert!((e.value - expect).abs() < 1e-9);
        assert!((e.value - 11.8598).abs() < 5e-4, "{}", e.value);

        let e = fg(&single(Category::DomainKnowledge, 24.6, &[25.8, 27.4, 26.4])).unwrap();
        assert!((e.value - (-7.8591)).abs() < 5e-4, "{}", e.value);

        let e = fg(&single(Category::Bias, 63.4, &[56.5, 56.9, 55.8])).unwrap();
        assert!((e.value - 11.0410).abs() < 5e-4, "{}", e.value);
    }

    #[test]
    fn unchanged_scores_give_exactly_zero() {
        let e = fg(&single(Category::Reasoning, 42.0, &[42.0, 42.0, 42.0])).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn zero_baseline_names_the_task() {
        let err = fg(&CategoryResult {
            category: Category::Reasoning,
            tasks: vec![TaskScores {
                task: "boolq_mini".to_string(),
                baseline: 0.0,
                after: vec![1.0],
            }],
        })
        .unwrap_err();
        match err {
            MetricsError::InvalidBaseline { task } => assert_eq!(task, "boolq_mini"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fg_is_scale_invariant() {
        let a = fg(&single(Category::Reasoning, 40.0, &[30.0, 35.0])).unwrap();
        let b = fg(&single(Category::Reasoning, 80.0, &[60.0, 70.0])).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn fg_decreases_when_any_post_score_rises() {
        let low = fg(&single(Category::Reasoning, 40.0, &[30.0, 35.0])).unwrap();
        let high = fg(&single(Category::Reasoning, 40.0, &[30.0, 36.0])).unwrap();
        assert!(high.value < low.value);
    }

    #[test]
    fn multi_task_category_averages_task_values() {
        let r = CategoryResult {
            category: Category::DomainKnowledge,
            tasks: vec![
                TaskScores {
                    task: "a".to_string(),
                    baseline: 50.0,
                    after: vec![45.0],
                },
                TaskScores {
                    task: "b".to_string(),
                    baseline: 25.0,
                    after: vec![30.0],
                },
            ],
        };
        let e = fg(&r).unwrap();
        let ta = (50.0 - 45.0) / 50.0 * 100.0;
        let tb = (25.0 - 30.0) / 25.0 * 100.0;
        assert!((e.value - (ta + tb) / 2.0).abs() < 1e-12);
        assert_eq!(e.per_task.len(), 2);
    }

    #[test]
    fn mismatched_step_counts_are_rejected() {
        let r = CategoryResult {
            category: Category::Bias,
            tasks: vec![
                TaskScores {
                    task: "a".to_string(),
                    baseline: 50.0,
                    after: vec![45.0, 44.0],
                },
                TaskScores {
                    task: "b".to_string(),
                    baseline: 25.0,
                    after: vec![30.0],
                },
            ],
        };
        assert!(matches!(fg(&r), Err(MetricsError::InvalidScores(_))));
    }
}
