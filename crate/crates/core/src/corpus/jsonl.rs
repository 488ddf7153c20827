//! JSONL loaders and writers for external task and evaluation data.
//!
//! One record per line, UTF-8. Task records are `{instruction, input,
//! output}`; choice records `{context, choices, correct}`; pair records
//! `{stereotype, anti}`. Malformed lines are collected with their line
//! numbers rather than aborting the load.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    Category, ChoiceItem, CorpusError, EvalSuite, InstructionSample, PairItem, SuiteItems, TaskSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// A successfully loaded value plus the per-line error report.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub line_errors: Vec<LineError>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_lines<T: DeserializeOwned>(
    path: &Path,
    validate: impl Fn(&T) -> Result<(), String>,
) -> Result<Loaded<Vec<T>>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut line_errors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(line) {
            Ok(record) => match validate(&record) {
                Ok(()) => out.push(record),
                Err(message) => line_errors.push(LineError {
                    line: line_no,
                    message,
                }),
            },
            Err(e) => line_errors.push(LineError {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    if out.is_empty() {
        return Err(CorpusError::EmptyAfterFiltering {
            path: path.display().to_string(),
            errors: line_errors.len(),
        });
    }
    Ok(Loaded {
        value: out,
        line_errors,
    })
}

/// Loads instruction samples from one JSONL file.
pub fn load_task_samples_jsonl(path: &Path) -> Result<Loaded<Vec<InstructionSample>>, CorpusError> {
    parse_lines(path, |s: &InstructionSample| {
        if s.output.is_empty() {
            Err("missing or empty \"output\"".to_string())
        } else {
            Ok(())
        }
    })
}

/// Assembles a task from separate train and test files, applying the sample cap.
pub fn task_from_jsonl(
    name: &str,
    train_path: &Path,
    test_path: &Path,
    max_samples: usize,
) -> Result<Loaded<TaskSpec>, CorpusError> {
    let train = load_task_samples_jsonl(train_path)?;
    let test = load_task_samples_jsonl(test_path)?;
    let mut line_errors = train.line_errors;
    line_errors.extend(test.line_errors);
    let spec = TaskSpec::new(name.to_string(), train.value, test.value, max_samples)?;
    Ok(Loaded {
        value: spec,
        line_errors,
    })
}

/// Loads an evaluation suite. Bias suites parse pair records; all other
/// categories parse choice records.
pub fn load_suite_jsonl(
    path: &Path,
    name: &str,
    category: Category,
) -> Result<Loaded<EvalSuite>, CorpusError> {
    let (items, line_errors) = match category {
        Category::Bias => {
            let loaded = parse_lines(path, |p: &PairItem| {
                if p.stereotype.is_empty() || p.anti.is_empty() {
                    Err("pair record needs non-empty \"stereotype\" and \"anti\"".to_string())
                } else {
                    Ok(())
                }
            })?;
            (SuiteItems::Pair(loaded.value), loaded.line_errors)
        }
        _ => {
            let loaded = parse_lines(path, |c: &ChoiceItem| {
                if c.choices.len() < 2 {
                    Err("choice record needs at least 2 choices".to_string())
                } else if c.correct >= c.choices.len() {
                    Err(format!(
                        "correct index {} out of range for {} choices",
                        c.correct,
                        c.choices.len()
                    ))
                } else {
                    Ok(())
                }
            })?;
            (SuiteItems::Choice(loaded.value), loaded.line_errors)
        }
    };
    let suite = EvalSuite::new(name.to_string(), category, items)?;
    Ok(Loaded {
        value: suite,
        line_errors,
    })
}

fn write_lines<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| CorpusError::InvalidRecord(format!("encode: {e}")))?;
        writeln!(file, "{line}").map_err(io_err(path))?;
    }
    Ok(())
}

/// Writes one split of a task. A round trip through `load_task_samples_jsonl`
/// preserves every sample.
pub fn write_task_jsonl(path: &Path, samples: &[InstructionSample]) -> Result<(), CorpusError> {
    write_lines(path, samples)
}

pub fn write_suite_jsonl(path: &Path, suite: &EvalSuite) -> Result<(), CorpusError> {
    match &suite.items {
        SuiteItems::Choice(items) => write_lines(path, items),
        SuiteItems::Pair(items) => write_lines(path, items),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_valid_lines_and_reports_bad_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("task.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"instruction\":\"a\",\"input\":\"b\",\"output\":\"c\"}\n",
                "{\"instruction\":\"d\",\"output\":\"e\"}\n",
                "{\"instruction\":\"missing output\"}\n",
                "not json at all\n",
            ),
        )
        .unwrap();
        let loaded = load_task_samples_jsonl(&path).unwrap();
        assert_eq!(loaded.value.len(), 2);
        assert_eq!(loaded.value[1].input, "");
        assert_eq!(loaded.line_errors.len(), 2);
        assert_eq!(loaded.line_errors[0].line, 3);
        assert_eq!(loaded.line_errors[1].line, 4);
    }

    #[test]
    fn empty_after_filtering_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "garbage\n").unwrap();
        assert!(matches!(
            load_task_samples_jsonl(&path),
            Err(CorpusError::EmptyAfterFiltering { .. })
        ));
        let missing = dir.path().join("nope.jsonl");
        assert!(matches!(
            load_task_samples_jsonl(&missing),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn task_round_trip_preserves_samples() {
        let dir = tempfile::tempdir().unwrap();
        let task = crate::corpus::gen_synthetic_task(crate::corpus::TaskKind::Question, 12, 4, 3)
            .unwrap();
        let train = dir.path().join("train.jsonl");
        let test = dir.path().join("test.jsonl");
        write_task_jsonl(&train, &task.train).unwrap();
        write_task_jsonl(&test, &task.test).unwrap();
        let back = task_from_jsonl("question", &train, &test, usize::MAX).unwrap();
        assert!(back.line_errors.is_empty());
        assert_eq!(back.value.train, task.train);
        assert_eq!(back.value.test, task.test);
    }

    #[test]
    fn suite_round_trip_choice_and_pair() {
        let dir = tempfile::tempdir().unwrap();
        for suite in crate::corpus::builtin_suites() {
            let path = dir.path().join(format!("{}.jsonl", suite.name));
            write_suite_jsonl(&path, &suite).unwrap();
            let back = load_suite_jsonl(&path, &suite.name, suite.category).unwrap();
            assert!(back.line_errors.is_empty());
            assert_eq!(back.value, suite);
        }
    }

    #[test]
    fn bias_category_rejects_choice_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.jsonl");
        std::fs::write(
            &path,
            "{\"context\":\"c\",\"choices\":[\"a\",\"b\"],\"correct\":0}\n",
        )
        .unwrap();
        // Parsed as a pair record this line is malformed, and the suite ends
        // up empty, which is the load error.
        assert!(load_suite_jsonl(&path, "x", Category::Bias).is_err());
    }
}
