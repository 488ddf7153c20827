//! Experiment stages: pretraining, growth with continued pretraining,
//! sequential fine-tuning, and evaluation sweeps.

use std::path::Path;

use crate::corpus::{
    gen_synthetic_task, make_pretrain_corpus, task_from_jsonl, Category, EvalSuite, SuiteItems,
    TaskSpec, Tokenizer,
};
use crate::growth::{stack_grow, GrowthSpec};
use crate::metrics::{bias_percentage, choice_accuracy};
use crate::model::{save_checkpoint, ModelConfig, TransformerModel};
use crate::numerics::ScheduleSpec;

use super::config::{derive_seed, Arm, ExperimentConfig, TaskConfig, TaskSource};
use super::registry::{CheckpointEntry, CheckpointRegistry};
use super::report::{LossPoint, LossSplit, StageCurve, TaskCurve};
use super::trainer::{
    eval_loss, into_batches, prepare_task, shuffled, stream_windows, train_on_batches,
};
use super::HarnessError;

fn pretrain_schedule(cfg: &ExperimentConfig, steps: u64) -> ScheduleSpec {
    let p = &cfg.pretrain;
    ScheduleSpec::cosine(
        p.base_lr,
        p.warmup_steps.min(steps),
        steps.max(1),
        0.1 * p.base_lr,
    )
}

fn run_pretrain_stage(
    model: &mut TransformerModel,
    cfg: &ExperimentConfig,
    corpus_seed: u64,
    budget: usize,
    stage: &str,
) -> Result<StageCurve, HarnessError> {
    let corpus = make_pretrain_corpus(corpus_seed, budget);
    let windows = stream_windows(&corpus.tokens, cfg.pretrain.window);
    let batches = into_batches(windows, cfg.pretrain.batch_size);
    let steps = batches.len() as u64;
    let schedule = pretrain_schedule(cfg, steps);
    let mut points = Vec::new();
    let stats = train_on_batches(
        model,
        &batches,
        1,
        &schedule,
        cfg.pretrain.weight_decay,
        cfg.log_interval,
        &mut points,
        0,
    )
    .map_err(HarnessError::in_stage(stage))?;
    model
        .provenance
        .training
        .push(format!("{stage}: {budget} tokens, {} steps", stats.optimizer_steps));
    Ok(StageCurve {
        stage: stage.to_string(),
        points,
    })
}

/// Pretrains the arm's starting model (M_0 for the scratch arm; the small
/// model for the stack arm) and saves it under `dir`.
pub fn pretrain(
    cfg: &ExperimentConfig,
    arm: Arm,
    dir: &Path,
) -> Result<(TransformerModel, StageCurve), HarnessError> {
    cfg.validate().map_err(HarnessError::in_stage("pretrain"))?;
    let (model_cfg, corpus_seed, budget, stage, file) = match arm {
        Arm::Stack => (
            ModelConfig {
                seed: derive_seed(cfg.seed, "init:small"),
                ..cfg.model
            },
            derive_seed(cfg.seed, "corpus:small"),
            cfg.pretrain.small_budget_tokens,
            "pretrain:small",
            "small.sclm",
        ),
        Arm::Scratch => (
            ModelConfig {
                n_layers: cfg
                    .growth
                    .grown_depth(cfg.model.n_layers)
                    .map_err(|e| HarnessError::Config(e.to_string()))?,
                seed: derive_seed(cfg.seed, "init:scratch"),
                ..cfg.model
            },
            derive_seed(cfg.seed, "corpus:grown"),
            cfg.pretrain.scratch_budget_tokens,
            "pretrain:scratch",
            "m0.sclm",
        ),
    };
    let mut model =
        TransformerModel::init(model_cfg).map_err(|e| HarnessError::Config(e.to_string()))?;
    let curve = run_pretrain_stage(&mut model, cfg, corpus_seed, budget, stage)?;
    save_checkpoint(&model, &dir.join(file)).map_err(HarnessError::from)?;
    Ok((model, curve))
}

/// Applies stack growth to a trained small model, resets optimizer state
/// (implicit: stages build fresh optimizers), continues pretraining for the
/// post-growth budget, and saves the result as the stack arm's M_0.
pub fn grow_and_continue(
    small: &TransformerModel,
    growth: &GrowthSpec,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(TransformerModel, StageCurve), HarnessError> {
    let mut grown = stack_grow(small, growth).map_err(HarnessError::from)?;
    let budget = cfg.pretrain.grown_budget_tokens;
    let curve = if budget > 0 {
        run_pretrain_stage(
            &mut grown,
            cfg,
            derive_seed(cfg.seed, "corpus:grown"),
            budget,
            "pretrain:continue",
        )?
    } else {
        StageCurve {
            stage: "pretrain:continue".to_string(),
            points: Vec::new(),
        }
    };
    save_checkpoint(&grown, &dir.join("m0.sclm")).map_err(HarnessError::from)?;
    Ok((grown, curve))
}

/// Builds the ordered task list from config sources.
pub fn build_tasks(cfg: &ExperimentConfig) -> Result<Vec<TaskSpec>, HarnessError> {
    cfg.tasks
        .iter()
        .map(|t| build_task(t, cfg.seed))
        .collect()
}

fn build_task(t: &TaskConfig, seed: u64) -> Result<TaskSpec, HarnessError> {
    let mut spec = match &t.source {
        TaskSource::Synthetic { kind, n_train, n_test } => {
            gen_synthetic_task(*kind, *n_train, *n_test, derive_seed(seed, &format!("task:{}", t.name)))?
        }
        TaskSource::Jsonl { train, test } => {
            task_from_jsonl(&t.name, train, test, t.max_samples)?.value
        }
    };
    spec.name = t.name.clone();
    spec.train.truncate(t.max_samples);
    spec.max_samples = t.max_samples;
    Ok(spec)
}

/// Result of fine-tuning one task: per-point curve plus the validation loss
/// of the incoming model on this task's held-out split.
pub struct TaskRun {
    pub curve: TaskCurve,
    pub incoming_val_loss: f64,
    pub epoch_val_losses: Vec<f64>,
    pub skipped_samples: usize,
}

/// Sequential fine-tuning: task m starts from M_{m-1}, sees only its own
/// data (no rehearsal), saves per-epoch checkpoints E1..Ek, and labels the
/// final epoch's checkpoint M_m. Returns the registry of everything saved
/// plus per-task curves; `on_task_done` is invoked with (task index, model)
/// after each task so callers can evaluate intermediate checkpoints.
pub fn finetune_sequential(
    m0: &TransformerModel,
    m0_path: &Path,
    tasks: &[TaskSpec],
    cfg: &ExperimentConfig,
    dir: &Path,
    mut on_task_done: impl FnMut(usize, &TransformerModel) -> Result<(), HarnessError>,
) -> Result<(CheckpointRegistry, Vec<TaskRun>), HarnessError> {
    assert_eq!(tasks.len(), cfg.tasks.len());
    if tasks.is_empty() {
        return Err(HarnessError::Config("task list is empty".to_string()));
    }
    let tokenizer = Tokenizer;
    let mut registry = CheckpointRegistry::default();
    registry.push(CheckpointEntry {
        label: "M_0".to_string(),
        path: m0_path.to_path_buf(),
        provenance: m0.provenance.clone(),
    });
    let mut model = m0.clone();
    let mut runs = Vec::with_capacity(tasks.len());
    for (idx, (task, tcfg)) in tasks.iter().zip(&cfg.tasks).enumerate() {
        let m = idx + 1;
        let stage = format!("finetune:{}", task.name);
        let prepared = prepare_task(
            &task.name,
            &task.train,
            &tokenizer,
            cfg.model.max_seq_len,
            derive_seed(cfg.seed, &format!("valsplit:{}", task.name)),
        )
        .map_err(HarnessError::in_stage(&stage))?;

        model.provenance.lineage.push(format!("M_{}", m - 1));
        let incoming_val_loss = eval_loss(&model, &prepared.val, tcfg.batch_size)
            .map_err(HarnessError::in_stage(&stage))?;

        let steps_per_epoch =
            (prepared.train.len().div_ceil(tcfg.batch_size) as u64).div_ceil(tcfg.grad_accum as u64);
        let total_steps = (steps_per_epoch * tcfg.epochs as u64).max(1);
        let schedule = tcfg.preset.schedule(tcfg.base_lr, tcfg.warmup_steps, total_steps);
        let weight_decay = tcfg.preset.weight_decay();

        let mut points = vec![LossPoint {
            step: 0,
            split: LossSplit::Val,
            loss: incoming_val_loss,
        }];
        let mut epoch_val_losses = Vec::with_capacity(tcfg.epochs);
        let mut step_offset = 0u64;
        for epoch in 1..=tcfg.epochs {
            let order = shuffled(
                &prepared.train,
                derive_seed(cfg.seed, &format!("epoch:{}:{}", task.name, epoch)),
            );
            let batches = into_batches(order, tcfg.batch_size);
            let stats = train_on_batches(
                &mut model,
                &batches,
                tcfg.grad_accum,
                &schedule,
                weight_decay,
                cfg.log_interval,
                &mut points,
                step_offset,
            )
            .map_err(HarnessError::in_stage(&stage))?;
            step_offset += stats.optimizer_steps;
            let val = eval_loss(&model, &prepared.val, tcfg.batch_size)
                .map_err(HarnessError::in_stage(&stage))?;
            epoch_val_losses.push(val);
            points.push(LossPoint {
                step: step_offset,
                split: LossSplit::Val,
                loss: val,
            });
            points.push(LossPoint {
                step: step_offset,
                split: LossSplit::EpochBorder,
                loss: val,
            });
            model
                .provenance
                .training
                .push(format!("{}: epoch {epoch}/{}", stage, tcfg.epochs));
            let file = dir.join(format!("m{m}_e{epoch}.sclm"));
            save_checkpoint(&model, &file).map_err(HarnessError::from)?;
            registry.push(CheckpointEntry {
                label: format!("M_{m}.E{epoch}"),
                path: file.clone(),
                provenance: model.provenance.clone(),
            });
            if epoch == tcfg.epochs {
                registry.push(CheckpointEntry {
                    label: format!("M_{m}"),
                    path: file,
                    provenance: model.provenance.clone(),
                });
            }
        }
        runs.push(TaskRun {
            curve: TaskCurve {
                task: task.name.clone(),
                points,
            },
            incoming_val_loss,
            epoch_val_losses,
            skipped_samples: prepared.skipped,
        });
        on_task_done(m, &model).map_err(HarnessError::in_stage(&stage))?;
    }
    Ok((registry, runs))
}

/// One evaluation column: every suite scored against one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalColumn {
    pub scores: Vec<f64>,
    pub skipped: Vec<usize>,
}

/// Scores every suite against a frozen model: choice accuracy for non-bias
/// suites, bias percentage for bias suites, merged in suite order.
pub fn evaluate_all(
    model: &TransformerModel,
    suites: &[EvalSuite],
    tokenizer: &Tokenizer,
) -> Result<EvalColumn, HarnessError> {
    let mut scores = Vec::with_capacity(suites.len());
    let mut skipped = Vec::with_capacity(suites.len());
    for suite in suites {
        let outcome = match suite.items {
            SuiteItems::Choice(_) => choice_accuracy(model, suite, tokenizer),
            SuiteItems::Pair(_) => bias_percentage(model, suite, tokenizer),
        }
        .map_err(|e| HarnessError::Data(format!("suite '{}': {e}", suite.name)))?;
        scores.push(outcome.percent);
        skipped.push(outcome.skipped);
    }
    Ok(EvalColumn { scores, skipped })
}

/// Loads suites per config: the bundled battery or external JSONL files.
pub fn load_suites(cfg: &ExperimentConfig) -> Result<Vec<EvalSuite>, HarnessError> {
    match &cfg.suites {
        super::config::SuiteSource::Builtin => Ok(crate::corpus::builtin_suites()),
        super::config::SuiteSource::Files(entries) => entries
            .iter()
            .map(|e| {
                let loaded = crate::corpus::load_suite_jsonl(&e.path, &e.name, e.category)?;
                Ok(loaded.value)
            })
            .collect(),
    }
}

/// Groups suite scores by category in the canonical category order.
pub fn categories_in_order() -> [Category; 4] {
    [
        Category::DomainKnowledge,
        Category::Reasoning,
        Category::ReadingComprehension,
        Category::Bias,
    ]
}
