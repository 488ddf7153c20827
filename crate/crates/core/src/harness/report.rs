//! Run reports and their file outputs: report.json, metrics.csv,
//! loss_curves.csv, fg_summary.csv.
//!
//! report.json is byte-deterministic for a fixed (config, seed): wall-clock
//! timing goes to a separate side file, and all paths are stored relative to
//! the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Category;
use crate::metrics::FgEntry;

use super::config::ExperimentConfig;
use super::registry::CheckpointRegistry;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSplit {
    Train,
    Val,
    EpochBorder,
}

impl LossSplit {
    pub fn label(&self) -> &'static str {
        match self {
            LossSplit::Train => "train",
            LossSplit::Val => "val",
            LossSplit::EpochBorder => "epoch_border",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: u64,
    pub split: LossSplit,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCurve {
    pub stage: String,
    pub points: Vec<LossPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCurve {
    pub task: String,
    pub points: Vec<LossPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteInfo {
    pub name: String,
    pub category: Category,
    pub metric: String,
}

/// Evaluation matrix: one row per suite, one column per checkpoint M_0..M_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix {
    pub suites: Vec<SuiteInfo>,
    pub checkpoints: Vec<String>,
    /// scores[suite][checkpoint]
    pub scores: Vec<Vec<f64>>,
    /// skipped[suite][checkpoint]
    pub skipped: Vec<Vec<usize>>,
}

impl EvalMatrix {
    pub fn column(&self, checkpoint: &str) -> Option<Vec<f64>> {
        let idx = self.checkpoints.iter().position(|c| c == checkpoint)?;
        Some(self.scores.iter().map(|row| row[idx]).collect())
    }
}

/// Text-generation metrics of one checkpoint on one task's test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRow {
    pub task: String,
    pub checkpoint: String,
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rougel: f64,
    pub sari: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: String,
    pub pretrain_curves: Vec<StageCurve>,
    pub task_curves: Vec<TaskCurve>,
    pub skipped_samples: Vec<(String, usize)>,
    pub eval: EvalMatrix,
    pub fg: Vec<FgEntry>,
    pub inference: Vec<InferenceRow>,
    pub registry: CheckpointRegistry,
    /// Validation loss of M_0 on task 1's split vs after the first epoch.
    pub first_task_val: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub arms: Vec<ArmReport>,
    /// Wall-clock seconds; excluded from report.json so fixed-seed reruns are
    /// byte-identical. Emitted separately in timing.txt.
    #[serde(default, skip_serializing)]
    pub wall_clock_secs: f64,
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes report.json, metrics.csv, loss_curves.csv, fg_summary.csv, and
/// timing.txt into `dir`.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();

    let json = serde_json::to_string_pretty(report)
        .map_err(|e| HarnessError::Data(format!("encode report: {e}")))?;
    let path = dir.join("report.json");
    write_file(&path, &json)?;
    written.push(path);

    // metrics.csv: evaluation matrix plus inference rows.
    let mut csv = String::from("suite,category,checkpoint,metric,value\n");
    for arm in &report.arms {
        for (row, suite) in arm.eval.suites.iter().enumerate() {
            for (col, ckpt) in arm.eval.checkpoints.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_field(&format!("{}/{}", arm.arm, suite.name)),
                    suite.category.label(),
                    csv_field(ckpt),
                    csv_field(&suite.metric),
                    arm.eval.scores[row][col]
                ));
            }
        }
        for r in &arm.inference {
            for (metric, value) in [
                ("bleu", r.bleu),
                ("rouge1", r.rouge1),
                ("rouge2", r.rouge2),
                ("rougel", r.rougel),
                ("sari", r.sari),
            ] {
                csv.push_str(&format!(
                    "{},inference,{},{},{}\n",
                    csv_field(&format!("{}/{}_test", arm.arm, r.task)),
                    csv_field(&r.checkpoint),
                    metric,
                    value
                ));
            }
        }
    }
    let path = dir.join("metrics.csv");
    write_file(&path, &csv)?;
    written.push(path);

    // loss_curves.csv with epoch-border marker rows.
    let mut csv = String::from("arm,task,step,split,loss\n");
    for arm in &report.arms {
        for stage in &arm.pretrain_curves {
            for p in &stage.points {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    arm.arm,
                    csv_field(&stage.stage),
                    p.step,
                    p.split.label(),
                    p.loss
                ));
            }
        }
        for tc in &arm.task_curves {
            for p in &tc.points {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    arm.arm,
                    csv_field(&tc.task),
                    p.step,
                    p.split.label(),
                    p.loss
                ));
            }
        }
    }
    let path = dir.join("loss_curves.csv");
    write_file(&path, &csv)?;
    written.push(path);

    // fg_summary.csv: per-category aggregate plus per-suite breakdown.
    let mut csv = String::from("arm,category,task,fg\n");
    for arm in &report.arms {
        for entry in &arm.fg {
            csv.push_str(&format!(
                "{},{},overall,{}\n",
                arm.arm,
                entry.category.label(),
                entry.value
            ));
            for (task, value) in &entry.per_task {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    arm.arm,
                    entry.category.label(),
                    csv_field(task),
                    value
                ));
            }
        }
    }
    let path = dir.join("fg_summary.csv");
    write_file(&path, &csv)?;
    written.push(path);

    let path = dir.join("timing.txt");
    write_file(&path, &format!("wall_clock_secs={}\n", report.wall_clock_secs))?;
    written.push(path);

    Ok(written)
}

/// Loads report.json back; inverse of the emit path for the report body.
pub fn load_report(dir: &Path) -> Result<RunReport, HarnessError> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Data(format!("decode report: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_report() -> RunReport {
        RunReport {
            config: ExperimentConfig::desk_default(1),
            seed: 1,
            arms: vec![ArmReport {
                arm: "scratch".to_string(),
                pretrain_curves: vec![StageCurve {
                    stage: "pretrain:scratch".to_string(),
                    points: vec![LossPoint {
                        step: 1,
                        split: LossSplit::Train,
                        loss: 5.0,
                    }],
                }],
                task_curves: vec![TaskCurve {
                    task: "simplify".to_string(),
                    points: vec![
                        LossPoint {
                            step: 10,
                            split: LossSplit::Val,
                            loss: 2.0,
                        },
                        LossPoint {
                            step: 10,
                            split: LossSplit::EpochBorder,
                            loss: 2.0,
                        },
                    ],
                }],
                skipped_samples: vec![("simplify".to_string(), 0)],
                eval: EvalMatrix {
                    suites: vec![SuiteInfo {
                        name: "boolq_mini".to_string(),
                        category: Category::Reasoning,
                        metric: "accuracy".to_string(),
                    }],
                    checkpoints: vec!["M_0".to_string(), "M_1".to_string()],
                    scores: vec![vec![50.0, 43.0]],
                    skipped: vec![vec![0, 0]],
                },
                fg: vec![],
                inference: vec![InferenceRow {
                    task: "simplify".to_string(),
                    checkpoint: "M_1".to_string(),
                    bleu: 0.2,
                    rouge1: 0.4,
                    rouge2: 0.2,
                    rougel: 0.4,
                    sari: 40.0,
                }],
                registry: CheckpointRegistry::default(),
                first_task_val: (2.5, 2.0),
            }],
            wall_clock_secs: 1.0,
        }
    }

    #[test]
    fn emit_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let report = tiny_report();
        let files = emit_report(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let back = load_report(dir.path()).unwrap();
        assert_eq!(back.arms, report.arms);
        assert_eq!(back.seed, report.seed);
        // wall clock is not serialized
        assert_eq!(back.wall_clock_secs, 0.0);
    }

    #[test]
    fn csv_row_counts_match_matrix_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let report = tiny_report();
        emit_report(&report, dir.path()).unwrap();
        let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        // header + 1 suite x 2 checkpoints + 5 inference metrics
        assert_eq!(metrics.lines().count(), 1 + 2 + 5);
        let losses = fs::read_to_string(dir.path().join("loss_curves.csv")).unwrap();
        assert_eq!(losses.lines().count(), 1 + 1 + 2);
        assert!(losses.contains("epoch_border"));
    }

    #[test]
    fn report_json_excludes_wall_clock() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&tiny_report(), dir.path()).unwrap();
        let json = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(!json.contains("wall_clock"));
        let timing = fs::read_to_string(dir.path().join("timing.txt")).unwrap();
        assert!(timing.contains("wall_clock_secs=1"));
    }
}
