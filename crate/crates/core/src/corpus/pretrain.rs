//! Deterministic synthetic pretraining stream.
//!
//! The stream interleaves fact statements, question/answer lines, task-shaped
//! lines (goals, placements, stories, sums, dialogues), bias sentences with a
//! 4:1 frequency skew toward the favored variant, and filler sentences from a
//! small grammar. Same seed, same stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::facts::{
    all_facts, bias_sentence, question, statement, BIAS_FAMILIES, DIALOGUES, FILLER_ADJ,
    FILLER_NOUN, FILLER_VERB, GOALS, NUMBER_WORDS, PLACEMENTS, STORIES,
};
use super::tokenizer::Tokenizer;

/// Frequency of the favored bias variant relative to its alternate.
pub const BIAS_SKEW: usize = 4;

#[derive(Debug, Clone)]
pub struct PretrainCorpus {
    pub tokens: Vec<u32>,
    pub budget: usize,
    pub seed: u64,
}

/// Weighted sentence pool; one pass emits every entry once per weight unit.
fn sentence_pool() -> Vec<(String, usize)> {
    let mut pool: Vec<(String, usize)> = Vec::new();
    for f in all_facts() {
        pool.push((statement(&f), 4));
        pool.push((question(&f), 3));
        pool.push((
            format!("q : {} {} {} , true or false ? a : true .", f.0, f.1, f.2),
            1,
        ));
    }
    // False statements pair each subject with an object from a different fact.
    let facts = all_facts();
    for (i, f) in facts.iter().enumerate() {
        let wrong = facts[(i + 7) % facts.len()].2;
        pool.push((
            format!("q : {} {} {} , true or false ? a : false .", f.0, f.1, wrong),
            1,
        ));
    }
    for (goal, solution) in GOALS {
        pool.push((format!("to {goal} , {solution} ."), 3));
    }
    for (actor, obj, place) in PLACEMENTS {
        pool.push((format!("the {actor} put the {obj} in the {place} ."), 3));
    }
    for (actor, first, next) in STORIES {
        pool.push((format!("the {actor} {first} . then the {actor} {next} ."), 3));
    }
    for a in 0..=9usize {
        for b in 0..=(9 - a) {
            let s = format!(
                "{} plus {} is {} .",
                NUMBER_WORDS[a],
                NUMBER_WORDS[b],
                NUMBER_WORDS[a + b]
            );
            pool.push((s, 1));
            pool.push((
                format!(
                    "q : what is {} plus {} ? a : {} .",
                    NUMBER_WORDS[a],
                    NUMBER_WORDS[b],
                    NUMBER_WORDS[a + b]
                ),
                1,
            ));
        }
    }
    for (open, reply) in DIALOGUES {
        pool.push((format!("a : {open} b : {reply}"), 3));
    }
    // Passage-shaped lines so reading-comprehension scoring is in-distribution.
    for pair in facts.chunks(2) {
        if let [f1, f2] = pair {
            pool.push((
                format!(
                    "passage : {} {} q : {} {} what ? a : {} .",
                    statement(f1),
                    statement(f2),
                    f1.0,
                    f1.1,
                    f1.2
                ),
                1,
            ));
        }
    }
    for family in BIAS_FAMILIES {
        for (group, favored, alternate) in family.pairs {
            pool.push((bias_sentence(group, favored), BIAS_SKEW));
            pool.push((bias_sentence(group, alternate), 1));
        }
    }
    pool
}

fn filler_sentence(rng: &mut ChaCha8Rng) -> String {
    let adj = FILLER_ADJ[rng.gen_range(0..FILLER_ADJ.len())];
    let noun = FILLER_NOUN[rng.gen_range(0..FILLER_NOUN.len())];
    let verb = FILLER_VERB[rng.gen_range(0..FILLER_VERB.len())];
    let noun2 = FILLER_NOUN[rng.gen_range(0..FILLER_NOUN.len())];
    format!("the {adj} {noun} {verb} the {noun2} .")
}

/// Builds a stream of exactly `budget` tokens.
pub fn make_pretrain_corpus(seed: u64, budget: usize) -> PretrainCorpus {
    assert!(budget >= 1, "corpus budget must be positive");
    let tokenizer = Tokenizer;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = sentence_pool();
    let mut text = String::with_capacity(budget + 128);
    let mut indices: Vec<usize> = pool
        .iter()
        .enumerate()
        .flat_map(|(i, (_, w))| std::iter::repeat(i).take(*w))
        .collect();
    while text.len() < budget {
        // One shuffled pass over the weighted pool, fillers mixed in.
        for k in (1..indices.len()).rev() {
            let j = rng.gen_range(0..=k);
            indices.swap(k, j);
        }
        for &i in &indices {
            if text.len() >= budget {
                break;
            }
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(&pool[i].0);
            if rng.gen_range(0..100) < 30 {
                text.push(' ');
                text.push_str(&filler_sentence(&mut rng));
            }
        }
    }
    let mut tokens = tokenizer.encode(&text);
    tokens.truncate(budget);
    PretrainCorpus {
        tokens,
        budget,
        seed,
    }
}
