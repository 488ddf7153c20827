//! Training loops shared by pretraining and fine-tuning stages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{apply_template, InstructionSample, Tokenizer, BOS_ID, PAD_ID};
use crate::model::{TrainableModel, TransformerModel};
use crate::numerics::{lr_at, AdamConfig, OptimizerState, ScheduleSpec};

use super::report::{LossPoint, LossSplit};
use super::HarnessError;

#[derive(Debug, Clone, Copy)]
pub struct TrainStats {
    pub optimizer_steps: u64,
    pub first_logged_loss: f64,
    pub last_logged_loss: f64,
}

/// One masked training sequence.
pub(crate) type Sequence = (Vec<u32>, Vec<bool>);

fn as_refs(seqs: &[Sequence]) -> Vec<(&[u32], &[bool])> {
    seqs.iter().map(|(t, m)| (t.as_slice(), m.as_slice())).collect()
}

/// Runs Adam over pre-built batches. Each batch is a list of sequences;
/// consecutive `grad_accum` batches form one optimizer step with averaged
/// gradients. Train loss is logged every `log_interval` steps.
#[allow(clippy::too_many_arguments)]
pub(crate) fn train_on_batches(
    model: &mut TransformerModel,
    batches: &[Vec<Sequence>],
    grad_accum: usize,
    schedule: &ScheduleSpec,
    weight_decay: f32,
    log_interval: u64,
    curve: &mut Vec<LossPoint>,
    step_offset: u64,
) -> Result<TrainStats, HarnessError> {
    schedule.validate()?;
    let trainable = TrainableModel::new(model);
    let entries = TransformerModel::param_entries(&model.config);
    let mut optim = OptimizerState::new(
        AdamConfig::with_weight_decay(weight_decay),
        entries.iter().map(|(n, s)| (n.clone(), s.iter().product())),
    );
    let mut accum: Vec<Vec<f32>> = Vec::new();
    let mut in_accum = 0usize;
    let mut step = 0u64;
    let mut first_logged = f64::NAN;
    let mut last_logged = f64::NAN;
    let mut window_losses: Vec<f64> = Vec::new();

    for batch in batches {
        let refs = as_refs(batch);
        let loss = trainable.loss(&refs, PAD_ID)?;
        let loss_value = f64::from(loss.item());
        if !loss_value.is_finite() {
            return Err(HarnessError::Numeric(format!(
                "non-finite training loss at optimizer step {step}"
            )));
        }
        window_losses.push(loss_value);
        loss.backward().map_err(HarnessError::from)?;
        let grads = trainable.grads();
        trainable.zero_grads();
        if accum.is_empty() {
            accum = grads;
        } else {
            for (a, g) in accum.iter_mut().zip(&grads) {
                for (x, y) in a.iter_mut().zip(g) {
                    *x += y;
                }
            }
        }
        in_accum += 1;
        if in_accum < grad_accum {
            continue;
        }
        if grad_accum > 1 {
            let inv = 1.0 / grad_accum as f32;
            for a in accum.iter_mut() {
                for x in a.iter_mut() {
                    *x *= inv;
                }
            }
        }
        let lr = lr_at(step.min(schedule.total_steps), schedule)? as f32;
        {
            let params = trainable.params();
            let mut values: Vec<Vec<f32>> = params.iter().map(|(_, t)| t.data()).collect();
            let mut pairs: Vec<(&mut [f32], &[f32])> = values
                .iter_mut()
                .zip(accum.iter())
                .map(|(v, g)| (v.as_mut_slice(), g.as_slice()))
                .collect();
            optim.step(&mut pairs, lr)?;
            for ((_, t), v) in params.iter().zip(&values) {
                t.set_data(v);
            }
        }
        accum.clear();
        in_accum = 0;
        step += 1;
        if step % log_interval == 0 || step == 1 {
            let mean = window_losses.iter().sum::<f64>() / window_losses.len() as f64;
            window_losses.clear();
            curve.push(LossPoint {
                step: step_offset + step,
                split: LossSplit::Train,
                loss: mean,
            });
            if first_logged.is_nan() {
                first_logged = mean;
            }
            last_logged = mean;
        }
    }
    // Trailing micro-batches short of a full accumulation window still count.
    if in_accum > 0 {
        let inv = 1.0 / in_accum as f32;
        for a in accum.iter_mut() {
            for x in a.iter_mut() {
                *x *= inv;
            }
        }
        let lr = lr_at(step.min(schedule.total_steps), schedule)? as f32;
        let params = trainable.params();
        let mut values: Vec<Vec<f32>> = params.iter().map(|(_, t)| t.data()).collect();
        let mut pairs: Vec<(&mut [f32], &[f32])> = values
            .iter_mut()
            .zip(accum.iter())
            .map(|(v, g)| (v.as_mut_slice(), g.as_slice()))
            .collect();
        optim.step(&mut pairs, lr)?;
        for ((_, t), v) in params.iter().zip(&values) {
            t.set_data(v);
        }
        step += 1;
    }
    trainable.export_into(model);
    Ok(TrainStats {
        optimizer_steps: step,
        first_logged_loss: first_logged,
        last_logged_loss: last_logged,
    })
}

/// Splits a token stream into anchor-prefixed training windows covering every
/// stream token as a target exactly once.
pub(crate) fn stream_windows(tokens: &[u32], window: usize) -> Vec<Sequence> {
    let mut out = Vec::with_capacity(tokens.len() / window + 1);
    for chunk in tokens.chunks(window) {
        let mut seq = Vec::with_capacity(chunk.len() + 1);
        seq.push(BOS_ID);
        seq.extend_from_slice(chunk);
        let mask = vec![true; seq.len()];
        out.push((seq, mask));
    }
    out
}

/// Groups sequences into batches of `batch_size` preserving order.
pub(crate) fn into_batches(seqs: Vec<Sequence>, batch_size: usize) -> Vec<Vec<Sequence>> {
    let mut out = Vec::with_capacity(seqs.len() / batch_size + 1);
    let mut cur = Vec::with_capacity(batch_size);
    for s in seqs {
        cur.push(s);
        if cur.len() == batch_size {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Templated task data ready for one fine-tuning stage.
pub(crate) struct PreparedTask {
    pub train: Vec<Sequence>,
    pub val: Vec<Sequence>,
    pub skipped: usize,
}

/// Templates all samples, skipping over-length ones with a count, and holds
/// out ~10% for validation by a seeded content hash.
pub(crate) fn prepare_task(
    task_name: &str,
    samples: &[InstructionSample],
    tokenizer: &Tokenizer,
    max_seq_len: usize,
    seed: u64,
) -> Result<PreparedTask, HarnessError> {
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut skipped = 0usize;
    for s in samples {
        match apply_template(s, tokenizer, max_seq_len) {
            Ok(seq) => {
                let key = format!("{}\u{1}{}\u{1}{}", s.instruction, s.input, s.output);
                if super::config::derive_seed(seed, &key) % 10 == 0 {
                    val.push(seq);
                } else {
                    train.push(seq);
                }
            }
            Err(crate::corpus::CorpusError::SampleTooLong { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    // The hash split can starve a side on tiny tasks; rebalance from the
    // larger side so both remain usable.
    if val.is_empty() && train.len() >= 2 {
        val.push(train.pop().unwrap());
    }
    if train.is_empty() && val.len() >= 2 {
        train.push(val.pop().unwrap());
    }
    if train.is_empty() {
        return Err(HarnessError::Data(format!(
            "task '{task_name}': no usable training samples ({skipped} skipped as over-length)"
        )));
    }
    Ok(PreparedTask { train, val, skipped })
}

/// Deterministic epoch shuffle.
pub(crate) fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<T> = items.to_vec();
    for k in (1..out.len()).rev() {
        let j = rng.gen_range(0..=k);
        out.swap(k, j);
    }
    out
}

/// Mean masked loss of a model over sequences, evaluated without gradients.
pub(crate) fn eval_loss(
    model: &TransformerModel,
    seqs: &[Sequence],
    batch_size: usize,
) -> Result<f64, HarnessError> {
    let mut total = 0.0f64;
    let mut count = 0usize;
    for batch in seqs.chunks(batch_size) {
        let refs: Vec<(&[u32], &[bool])> =
            batch.iter().map(|(t, m)| (t.as_slice(), m.as_slice())).collect();
        let targets: usize = refs
            .iter()
            .map(|(_, m)| m.iter().skip(1).filter(|&&x| x).count())
            .sum();
        let loss = model.masked_loss(&refs, PAD_ID)?;
        total += loss * targets as f64;
        count += targets;
    }
    if count == 0 {
        return Err(HarnessError::Data("validation set has no targets".to_string()));
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn micro_model(seed: u64) -> TransformerModel {
        TransformerModel::init(ModelConfig {
            vocab_size: crate::corpus::VOCAB_SIZE,
            d_model: 16,
            n_heads: 2,
            n_layers: 1,
            d_ff: 32,
            max_seq_len: 64,
            norm_eps: 1e-5,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn windows_cover_stream_exactly() {
        let tokens: Vec<u32> = (0..10u32).collect();
        let w = stream_windows(&tokens, 4);
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].0, vec![BOS_ID, 0, 1, 2, 3]);
        assert_eq!(w[2].0, vec![BOS_ID, 8, 9]);
        let covered: usize = w.iter().map(|(t, _)| t.len() - 1).sum();
        assert_eq!(covered, 10);
    }

    #[test]
    fn training_reduces_loss_on_repetitive_stream() {
        let mut model = micro_model(3);
        let tokens: Vec<u32> = "the cat sat on the mat . "
            .repeat(200)
            .bytes()
            .map(u32::from)
            .collect();
        let batches = into_batches(stream_windows(&tokens, 32), 8);
        let schedule = ScheduleSpec::constant(3e-3, batches.len() as u64);
        let mut curve = Vec::new();
        let stats =
            train_on_batches(&mut model, &batches, 1, &schedule, 0.0, 1, &mut curve, 0).unwrap();
        assert!(stats.optimizer_steps > 10, "{}", stats.optimizer_steps);
        assert!(
            stats.last_logged_loss < stats.first_logged_loss,
            "{} -> {}",
            stats.first_logged_loss,
            stats.last_logged_loss
        );
    }

    #[test]
    fn training_is_deterministic() {
        let tokens: Vec<u32> = "abcd efgh ".repeat(40).bytes().map(u32::from).collect();
        let batches = into_batches(stream_windows(&tokens, 16), 4);
        let schedule = ScheduleSpec::constant(1e-3, batches.len() as u64);
        let run = || {
            let mut model = micro_model(5);
            let mut curve = Vec::new();
            train_on_batches(&mut model, &batches, 1, &schedule, 0.0, 5, &mut curve, 0).unwrap();
            let mut bits = Vec::new();
            model.visit_params(|_, p| bits.extend(p.iter().map(|x| x.to_bits())));
            bits
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn grad_accumulation_counts_steps_correctly() {
        let mut model = micro_model(7);
        let tokens: Vec<u32> = "xyz ".repeat(64).bytes().map(u32::from).collect();
        let batches = into_batches(stream_windows(&tokens, 16), 2);
        let n_batches = batches.len() as u64;
        let schedule = ScheduleSpec::constant(1e-3, n_batches);
        let mut curve = Vec::new();
        let stats =
            train_on_batches(&mut model, &batches, 2, &schedule, 0.0, 1, &mut curve, 0).unwrap();
        assert_eq!(stats.optimizer_steps, n_batches.div_ceil(2));
    }

    #[test]
    fn prepare_task_splits_and_skips() {
        let task = crate::corpus::gen_synthetic_task(crate::corpus::TaskKind::Simplify, 60, 5, 2)
            .unwrap();
        let prepared = prepare_task("simplify", &task.train, &Tokenizer, 384, 11).unwrap();
        assert!(prepared.skipped == 0);
        assert!(!prepared.val.is_empty());
        assert!(prepared.train.len() > prepared.val.len());
        // Tight window: everything skipped is an error.
        let err = prepare_task("simplify", &task.train, &Tokenizer, 32, 11);
        assert!(err.is_err());
    }
}
