//! Seeded generators for the three continual tasks: text simplification,
//! emotion-grounded dialogue response, and question generation.
//!
//! Each generator draws structured (source → target) pairs from small
//! grammars, so the mapping is learnable at desk scale. Train and test
//! splits are disjoint by construction.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, InstructionSample, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Simplify,
    Dialogue,
    Question,
}

impl TaskKind {
    pub fn default_name(&self) -> &'static str {
        match self {
            TaskKind::Simplify => "simplify",
            TaskKind::Dialogue => "dialogue",
            TaskKind::Question => "question",
        }
    }
}

const SUBJECTS: &[&str] = &[
    "the farmer", "the sailor", "the weaver", "the miner", "the baker", "the pilot", "the nurse",
    "the poet",
];

/// (hard verb, simpler verb); the simpler form is never longer.
const HARD_EASY_VERBS: &[(&str, &str)] = &[
    ("utilizes", "uses"),
    ("commences", "starts"),
    ("terminates", "ends"),
    ("purchases", "buys"),
    ("observes", "sees"),
    ("assists", "helps"),
    ("obtains", "gets"),
    ("requires", "needs"),
];

const OBJECTS: &[&str] = &[
    "the cart", "the rope", "the loom", "the lamp", "the oven", "the map", "the tray", "the song",
];

const CLAUSES: &[&str] = &["(old)", "(worn)", "(very fine)", "(made of oak)", "(quite new)"];

const EMOTIONS: &[(&str, &str)] = &[
    ("joyful", "that is wonderful to hear ."),
    ("sad", "i am sorry that happened ."),
    ("angry", "take a deep breath and rest ."),
    ("afraid", "you are safe now , stay calm ."),
    ("proud", "you earned it , well done ."),
    ("tired", "you should rest for a while ."),
    ("lonely", "maybe meet a friend today ."),
    ("calm", "peace like that is a gift ."),
];

const SITUATION_VERBS: &[&str] = &[
    "i won", "i lost", "i found", "i broke", "i finished", "i started", "i missed", "i fixed",
];

const SITUATION_THINGS: &[&str] = &[
    "the game", "the race", "the ring", "the vase", "the work", "the course",
];

const QUESTION_EXTRAS: &[&str] = &[
    "sell it at the fair",
    "store it for winter",
    "share it with friends",
    "trade it in town",
    "keep it for later",
    "show it with pride",
    "send it down the road",
    "save it for the feast",
];

const QUESTION_TIMES: &[&str] = &[
    "in spring", "in summer", "in autumn", "in winter", "at dawn", "at noon", "at dusk", "at night",
];

const QUESTION_TRIPLES: &[(&str, &str, &str)] = &[
    ("the farmers", "grow", "grain"),
    ("the miners", "dig", "ore"),
    ("the weavers", "weave", "cloth"),
    ("the bakers", "bake", "bread"),
    ("the poets", "write", "verses"),
    ("the sailors", "sail", "ships"),
    ("the painters", "mix", "colors"),
    ("the singers", "sing", "songs"),
    ("the potters", "shape", "bowls"),
    ("the smiths", "forge", "tools"),
];

fn simplify_sample(rng: &mut ChaCha8Rng) -> InstructionSample {
    let subject = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
    let (hard, easy) = HARD_EASY_VERBS[rng.gen_range(0..HARD_EASY_VERBS.len())];
    let object = OBJECTS[rng.gen_range(0..OBJECTS.len())];
    let clause = CLAUSES[rng.gen_range(0..CLAUSES.len())];
    let source = format!("{subject} {hard} {object} {clause} .");
    let target = format!("{subject} {easy} {object} .");
    InstructionSample {
        instruction: "Rewrite the text so it is easier to read:".to_string(),
        input: source,
        output: target,
    }
}

fn dialogue_sample(rng: &mut ChaCha8Rng) -> InstructionSample {
    let (emotion, response) = EMOTIONS[rng.gen_range(0..EMOTIONS.len())];
    let verb = SITUATION_VERBS[rng.gen_range(0..SITUATION_VERBS.len())];
    let thing = SITUATION_THINGS[rng.gen_range(0..SITUATION_THINGS.len())];
    InstructionSample {
        instruction: format!(
            "The emotion is \"{emotion}\". Reply to: {verb} {thing} and i feel {emotion} ."
        ),
        input: String::new(),
        output: response.to_string(),
    }
}

fn question_sample(rng: &mut ChaCha8Rng) -> InstructionSample {
    let (subject, verb, object) = QUESTION_TRIPLES[rng.gen_range(0..QUESTION_TRIPLES.len())];
    let time = QUESTION_TIMES[rng.gen_range(0..QUESTION_TIMES.len())];
    let extra = QUESTION_EXTRAS[rng.gen_range(0..QUESTION_EXTRAS.len())];
    InstructionSample {
        instruction: "Write a question this text answers:".to_string(),
        input: format!("{subject} {verb} {object} {time} and {extra} ."),
        output: format!("what do {subject} {verb} ?"),
    }
}

/// Deterministic task generation. Draws until `n_train + n_test` distinct
/// samples exist, then splits them; panics if the grammar cannot supply that
/// many distinct samples.
pub fn gen_synthetic_task(
    kind: TaskKind,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<TaskSpec, CorpusError> {
    assert!(n_train >= 1 && n_test >= 1, "need at least one sample per split");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let want = n_train + n_test;
    let mut seen = HashSet::new();
    let mut samples = Vec::with_capacity(want);
    let mut attempts = 0usize;
    while samples.len() < want {
        attempts += 1;
        assert!(
            attempts < want * 2000,
            "task grammar for {kind:?} cannot produce {want} distinct samples"
        );
        let s = match kind {
            TaskKind::Simplify => simplify_sample(&mut rng),
            TaskKind::Dialogue => dialogue_sample(&mut rng),
            TaskKind::Question => question_sample(&mut rng),
        };
        if seen.insert(s.clone()) {
            samples.push(s);
        }
    }
    let test = samples.split_off(n_train);
    TaskSpec::new(kind.default_name().to_string(), samples, test, usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;

    #[test]
    fn same_seed_same_task() {
        let a = gen_synthetic_task(TaskKind::Simplify, 20, 5, 7).unwrap();
        let b = gen_synthetic_task(TaskKind::Simplify, 20, 5, 7).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        let c = gen_synthetic_task(TaskKind::Simplify, 20, 5, 8).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn simplify_targets_never_longer_than_sources() {
        let tk = Tokenizer;
        let task = gen_synthetic_task(TaskKind::Simplify, 60, 10, 3).unwrap();
        for s in task.train.iter().chain(&task.test) {
            assert!(
                tk.encode(&s.output).len() <= tk.encode(&s.input).len(),
                "target longer than source: {:?}",
                s
            );
        }
    }

    #[test]
    fn train_and_test_are_disjoint() {
        for kind in [TaskKind::Simplify, TaskKind::Dialogue, TaskKind::Question] {
            let task = gen_synthetic_task(kind, 40, 10, 11).unwrap();
            for t in &task.test {
                assert!(!task.train.contains(t));
            }
            assert_eq!(task.train.len(), 40);
            assert_eq!(task.test.len(), 10);
        }
    }

    #[test]
    fn dialogue_samples_have_empty_input() {
        let task = gen_synthetic_task(TaskKind::Dialogue, 10, 2, 1).unwrap();
        assert!(task.train.iter().all(|s| s.input.is_empty()));
        assert!(task.train.iter().all(|s| !s.output.is_empty()));
    }

    #[test]
    fn trigram_model_beats_uniform_on_test_targets() {
        // Oracle: a byte-level 3-gram count model with add-one smoothing,
        // fit on train targets, should assign test targets lower perplexity
        // than a uniform distribution over bytes. Confirms learnable signal.
        let task = gen_synthetic_task(TaskKind::Simplify, 120, 20, 5).unwrap();
        let mut counts: std::collections::HashMap<(u8, u8, u8), usize> = Default::default();
        let mut context_counts: std::collections::HashMap<(u8, u8), usize> = Default::default();
        for s in &task.train {
            let b = s.output.as_bytes();
            for w in b.windows(3) {
                *counts.entry((w[0], w[1], w[2])).or_default() += 1;
                *context_counts.entry((w[0], w[1])).or_default() += 1;
            }
        }
        let mut log_prob = 0.0f64;
        let mut n = 0usize;
        for s in &task.test {
            let b = s.output.as_bytes();
            for w in b.windows(3) {
                let c3 = *counts.get(&(w[0], w[1], w[2])).unwrap_or(&0) as f64;
                let c2 = *context_counts.get(&(w[0], w[1])).unwrap_or(&0) as f64;
                log_prob += ((c3 + 1.0) / (c2 + 256.0)).ln();
                n += 1;
            }
        }
        let trigram_ppl = (-log_prob / n as f64).exp();
        let uniform_ppl = 256.0;
        assert!(
            trigram_ppl < uniform_ppl,
            "trigram ppl {trigram_ppl} not below uniform {uniform_ppl}"
        );
    }
}
