//! Full two-arm experiment: pretrain → (growth arm: grow and continue) →
//! sequential fine-tuning → per-checkpoint evaluation → forgetting report →
//! inference metric table → emitted report files.

pub use super::report::{ArmReport, RunReport};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::corpus::{render_prompt, EvalSuite, InstructionSample, TaskSpec, Tokenizer, BOS_ID, EOS_ID};
use crate::metrics::{bleu, fg, rouge_l, rouge_n, sari, CategoryResult, FgEntry, TaskScores};
use crate::model::{load_checkpoint, GenMode, TransformerModel};

use super::config::{Arm, ExperimentConfig};
use super::report::{emit_report, EvalMatrix, InferenceRow, SuiteInfo};
use super::stages::{
    build_tasks, categories_in_order, evaluate_all, finetune_sequential, grow_and_continue,
    load_suites, pretrain,
};
use super::HarnessError;

/// Runs the configured arms and writes all report files into `out_dir`.
/// Fixed (config, seed) produce a byte-identical report.json.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    arms: &[Arm],
    out_dir: &Path,
) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    if arms.is_empty() {
        return Err(HarnessError::Config("no arms selected".to_string()));
    }
    let tasks = build_tasks(cfg).map_err(HarnessError::in_stage("build_tasks"))?;
    let suites = load_suites(cfg).map_err(HarnessError::in_stage("load_suites"))?;

    let reports: Vec<Result<ArmReport, HarnessError>> = match arms {
        [a] => vec![run_arm(cfg, *a, &tasks, &suites, out_dir)],
        [a, b] => {
            let (ra, rb) = rayon::join(
                || run_arm(cfg, *a, &tasks, &suites, out_dir),
                || run_arm(cfg, *b, &tasks, &suites, out_dir),
            );
            vec![ra, rb]
        }
        _ => arms
            .iter()
            .map(|a| run_arm(cfg, *a, &tasks, &suites, out_dir))
            .collect(),
    };
    let mut arm_reports = Vec::with_capacity(reports.len());
    for r in reports {
        arm_reports.push(r?);
    }
    let mut snapshot = cfg.clone();
    snapshot.out_dir = None;
    let report = RunReport {
        config: snapshot,
        seed: cfg.seed,
        arms: arm_reports,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    emit_report(&report, out_dir).map_err(HarnessError::in_stage("emit_report"))?;
    Ok(report)
}

fn run_arm(
    cfg: &ExperimentConfig,
    arm: Arm,
    tasks: &[TaskSpec],
    suites: &[EvalSuite],
    out_dir: &Path,
) -> Result<ArmReport, HarnessError> {
    let tokenizer = Tokenizer;
    let dir = out_dir.join(arm.label());
    let mut pretrain_curves = Vec::new();

    // Stage 1: the arm's M_0.
    let (m0, m0_path) = match arm {
        Arm::Scratch => {
            let (model, curve) = pretrain(cfg, arm, &dir)?;
            pretrain_curves.push(curve);
            (model, dir.join("m0.sclm"))
        }
        Arm::Stack => {
            let (small, curve) = pretrain(cfg, arm, &dir)?;
            pretrain_curves.push(curve);
            let (grown, curve) = grow_and_continue(&small, &cfg.growth, cfg, &dir)?;
            pretrain_curves.push(curve);
            (grown, dir.join("m0.sclm"))
        }
    };

    // Stage 2: baseline evaluation column.
    let mut columns = vec![evaluate_all(&m0, suites, &tokenizer)
        .map_err(HarnessError::in_stage("evaluate:M_0"))?];
    let mut checkpoints = vec!["M_0".to_string()];

    // Stage 3: sequential fine-tuning with evaluation after every task.
    let (registry, runs) = finetune_sequential(&m0, &m0_path, tasks, cfg, &dir, |m, model| {
        let column = evaluate_all(model, suites, &tokenizer)
            .map_err(HarnessError::in_stage(&format!("evaluate:M_{m}")))?;
        columns.push(column);
        checkpoints.push(format!("M_{m}"));
        Ok(())
    })?;

    let eval = EvalMatrix {
        suites: suites
            .iter()
            .map(|s| SuiteInfo {
                name: s.name.clone(),
                category: s.category,
                metric: s.metric_label().to_string(),
            })
            .collect(),
        checkpoints: checkpoints.clone(),
        scores: (0..suites.len())
            .map(|row| columns.iter().map(|c| c.scores[row]).collect())
            .collect(),
        skipped: (0..suites.len())
            .map(|row| columns.iter().map(|c| c.skipped[row]).collect())
            .collect(),
    };

    // Stage 4: forgetting per category.
    let fg_entries = compute_fg(&eval).map_err(HarnessError::in_stage("fg"))?;

    // Stage 5: inference metric table on each task's test set.
    let mut inference = Vec::new();
    for (idx, (task, tcfg)) in tasks.iter().zip(&cfg.tasks).enumerate() {
        let m = idx + 1;
        let mut labeled: Vec<(String, TransformerModel)> = vec![("M_0".to_string(), m0.clone())];
        for epoch in 1..=tcfg.epochs {
            let label = format!("M_{m}.E{epoch}");
            let entry = registry.get(&label).expect("epoch checkpoint registered");
            let model = load_checkpoint(&entry.path).map_err(HarnessError::from)?;
            labeled.push((label, model));
        }
        for (label, model) in &labeled {
            let row = inference_row(model, task, label, tcfg.gen_max_new, &tokenizer)
                .map_err(HarnessError::in_stage(&format!("inference:{}:{label}", task.name)))?;
            inference.push(row);
        }
    }

    let first = &runs[0];
    Ok(ArmReport {
        arm: arm.label().to_string(),
        pretrain_curves,
        task_curves: runs.iter().map(|r| r.curve.clone()).collect(),
        skipped_samples: tasks
            .iter()
            .zip(&runs)
            .map(|(t, r)| (t.name.clone(), r.skipped_samples))
            .collect(),
        eval,
        fg: fg_entries,
        inference,
        registry: registry.relative_to(out_dir),
        first_task_val: (
            first.incoming_val_loss,
            *first
                .epoch_val_losses
                .first()
                .expect("at least one epoch"),
        ),
    })
}

/// Applies fg() to each category present in the matrix, baseline column M_0,
/// post-task columns M_1..M_N.
pub fn compute_fg(eval: &EvalMatrix) -> Result<Vec<FgEntry>, HarnessError> {
    let mut out = Vec::new();
    for category in categories_in_order() {
        let tasks: Vec<TaskScores> = eval
            .suites
            .iter()
            .enumerate()
            .filter(|(_, s)| s.category == category)
            .map(|(row, s)| TaskScores {
                task: s.name.clone(),
                baseline: eval.scores[row][0],
                after: eval.scores[row][1..].to_vec(),
            })
            .collect();
        if tasks.is_empty() {
            continue;
        }
        out.push(fg(&CategoryResult { category, tasks }).map_err(HarnessError::from)?);
    }
    Ok(out)
}

fn source_text(sample: &InstructionSample) -> &str {
    if sample.input.is_empty() {
        &sample.instruction
    } else {
        &sample.input
    }
}

fn inference_row(
    model: &TransformerModel,
    task: &TaskSpec,
    checkpoint: &str,
    max_new: usize,
    tokenizer: &Tokenizer,
) -> Result<InferenceRow, HarnessError> {
    let outputs: Vec<Result<Option<(String, &InstructionSample)>, HarnessError>> = task
        .test
        .par_iter()
        .map(|sample| {
            let mut prompt = vec![BOS_ID];
            prompt.extend(tokenizer.encode(&render_prompt(sample)));
            if prompt.len() + 1 > model.config.max_seq_len {
                return Ok(None);
            }
            let ids = model
                .generate(&prompt, max_new, GenMode::Greedy, EOS_ID)
                .map_err(HarnessError::from)?;
            let text = tokenizer.decode(&ids).map_err(HarnessError::from)?;
            Ok(Some((text, sample)))
        })
        .collect();
    let mut n = 0usize;
    let mut sums = [0.0f64; 5];
    for out in outputs {
        let Some((hyp, sample)) = out? else { continue };
        let reference = sample.output.as_str();
        sums[0] += bleu(&hyp, &[reference], 4).map_err(HarnessError::from)?;
        sums[1] += rouge_n(&hyp, reference, 1);
        sums[2] += rouge_n(&hyp, reference, 2);
        sums[3] += rouge_l(&hyp, reference);
        sums[4] += sari(source_text(sample), &hyp, &[reference]).map_err(HarnessError::from)?;
        n += 1;
    }
    if n == 0 {
        return Err(HarnessError::Data(format!(
            "task '{}': every test prompt exceeded the context window",
            task.name
        )));
    }
    let inv = 1.0 / n as f64;
    Ok(InferenceRow {
        task: task.name.clone(),
        checkpoint: checkpoint.to_string(),
        bleu: sums[0] * inv,
        rouge1: sums[1] * inv,
        rouge2: sums[2] * inv,
        rougel: sums[3] * inv,
        sari: sums[4] * inv,
    })
}
