//! Bundled miniature evaluation suites.
//!
//! Mirrors the category structure of the full-scale benchmarks: four
//! domain-knowledge suites, six reasoning suites, one reading-comprehension
//! suite, and nine bias sub-suites. Items are drawn from the same tables the
//! pretraining stream repeats, so a pretrained model can score above chance.
//! Suite content is fixed (internal seed), independent of experiment seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::facts::{
    question_context, statement, BIAS_FAMILIES, DIALOGUES, GOALS, HUMANITIES_FACTS, NUMBER_WORDS,
    OTHER_FACTS, PLACEMENTS, SOCIAL_FACTS, STEM_FACTS, STORIES,
};
use super::{Category, ChoiceItem, EvalSuite, PairItem, SuiteItems};

const SUITE_SEED: u64 = 0xE7A1;

fn choice_suite(name: &str, category: Category, items: Vec<ChoiceItem>) -> EvalSuite {
    EvalSuite::new(name.to_string(), category, SuiteItems::Choice(items)).expect("builtin suite")
}

/// Shuffles the gold answer among distractors; returns (choices, correct).
fn arrange(rng: &mut ChaCha8Rng, gold: &str, distractors: &[&str]) -> (Vec<String>, usize) {
    let mut choices: Vec<String> = vec![gold.to_string()];
    choices.extend(distractors.iter().map(|s| s.to_string()));
    for k in (1..choices.len()).rev() {
        let j = rng.gen_range(0..=k);
        choices.swap(k, j);
    }
    let correct = choices.iter().position(|c| c == gold).unwrap();
    (choices, correct)
}

fn fact_suite(rng: &mut ChaCha8Rng, name: &str, facts: &[super::facts::Fact]) -> EvalSuite {
    let items = facts
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let d1 = facts[(i + 3) % facts.len()].2;
            let d2 = facts[(i + 5) % facts.len()].2;
            let (choices, correct) = arrange(rng, f.2, &[d1, d2]);
            ChoiceItem {
                context: question_context(f),
                choices,
                correct,
            }
        })
        .collect();
    choice_suite(name, Category::DomainKnowledge, items)
}

fn boolq_suite(rng: &mut ChaCha8Rng) -> EvalSuite {
    let facts = STEM_FACTS.iter().chain(SOCIAL_FACTS.iter());
    let mut items = Vec::new();
    for (i, f) in facts.enumerate() {
        let truthy = i % 2 == 0;
        let (subject, verb) = (f.0, f.1);
        let object = if truthy {
            f.2.to_string()
        } else {
            let pool = [STEM_FACTS, SOCIAL_FACTS].concat();
            pool[(i + 7) % pool.len()].2.to_string()
        };
        let gold = if truthy { "true" } else { "false" };
        let other = if truthy { "false" } else { "true" };
        let (choices, correct) = arrange(rng, gold, &[other]);
        items.push(ChoiceItem {
            context: format!("q : {subject} {verb} {object} , true or false ? a :"),
            choices,
            correct,
        });
    }
    choice_suite("boolq_mini", Category::Reasoning, items)
}

fn piqa_suite(rng: &mut ChaCha8Rng) -> EvalSuite {
    let items = GOALS
        .iter()
        .enumerate()
        .map(|(i, (goal, solution))| {
            let wrong = GOALS[(i + 3) % GOALS.len()].1;
            let (choices, correct) = arrange(rng, solution, &[wrong]);
            ChoiceItem {
                context: format!("to {goal} ,"),
                choices,
                correct,
            }
        })
        .collect();
    choice_suite("piqa_mini", Category::Reasoning, items)
}

fn winogrande_suite(rng: &mut ChaCha8Rng) -> EvalSuite {
    let items = PLACEMENTS
        .iter()
        .enumerate()
        .map(|(i, (actor, obj, place))| {
            let wrong = PLACEMENTS[(i + 3) % PLACEMENTS.len()].2;
            let (choices, correct) = arrange(rng, place, &[wrong]);
            ChoiceItem {
                context: format!("the {actor} put the {obj} in the"),
                choices,
                correct,
            }
        })
        .collect();
    choice_suite("winogrande_mini", Category::Reasoning, items)
}

fn hellaswag_suite(rng: &mut ChaCha8Rng) -> EvalSuite {
    let items = STORIES
        .iter()
        .enumerate()
        .map(|(i, (actor, first, next))| {
            let d1 = STORIES[(i + 2) % STORIES.len()].2;
            let d2 = STORIES[(i + 4) % STORIES.len()].2;
            let d3 = STORIES[(i + 6) % STORIES.len()].2;
            let (choices, correct) = arrange(rng, next, &[d1, d2, d3]);
            ChoiceItem {
                context: format!("the {actor} {first} . then the {actor}"),
                choices,
                correct,
            }
        })
        .collect();
    choice_suite("hellaswag_mini", Category::Reasoning, items)
}

fn mathqa_suite(rng: &mut ChaCha8Rng) -> EvalSuite {
    let sums = [(1usize, 2usize), (2, 3), (4, 4), (3, 5), (6, 2), (1, 7), (5, 4), (2, 6), (3, 3), (4, 5)];
    let items = sums
        .iter()
        .map(|&(a, b)| {
            let c = a + b;
            let gold = NUMBER_WORDS[c];
            let d1 = NUMBER_WORDS[(c + 1) % 10];
            let d2 = NUMBER_WORDS[c.saturating_sub(2)];
            let (choices, correct) = arrange(rng, gold, &[d1, d2]);
            ChoiceItem {
                context: format!(
                    "q : what is {} plus {} ? a :",
                    NUMBER_WORDS[a], NUMBER_WORDS[b]
                ),
                choices,
                correct,
            }
        })
        .collect();
    choice_suite("mathqa_mini", Category::Reasoning, items)
}

fn mutual_suite(rng: &mut ChaCha8Rng) -> EvalSuite {
    let items = DIALOGUES
        .iter()
        .enumerate()
        .map(|(i, (open, reply))| {
            let d1 = DIALOGUES[(i + 2) % DIALOGUES.len()].1;
            let d2 = DIALOGUES[(i + 4) % DIALOGUES.len()].1;
            let (choices, correct) = arrange(rng, reply, &[d1, d2]);
            ChoiceItem {
                context: format!("a : {open} b :"),
                choices,
                correct,
            }
        })
        .collect();
    choice_suite("mutual_mini", Category::Reasoning, items)
}

fn race_suite(rng: &mut ChaCha8Rng) -> EvalSuite {
    let facts = [STEM_FACTS, SOCIAL_FACTS, HUMANITIES_FACTS, OTHER_FACTS].concat();
    let mut items = Vec::new();
    for i in 0..10usize {
        let f1 = &facts[(i * 3) % facts.len()];
        let f2 = &facts[(i * 3 + 1) % facts.len()];
        let ask_first = i % 2 == 0;
        let target = if ask_first { f1 } else { f2 };
        let other = if ask_first { f2 } else { f1 };
        let d2 = facts[(i * 3 + 9) % facts.len()].2;
        let (choices, correct) = arrange(rng, target.2, &[other.2, d2]);
        items.push(ChoiceItem {
            context: format!(
                "passage : {} {} q : {} {} what ? a :",
                statement(f1),
                statement(f2),
                target.0,
                target.1
            ),
            choices,
            correct,
        });
    }
    choice_suite("race_mini", Category::ReadingComprehension, items)
}

/// The full bundled battery: 4 domain-knowledge, 6 reasoning, 1 reading
/// comprehension, 9 bias sub-suites, in a fixed reporting order.
pub fn builtin_suites() -> Vec<EvalSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut suites = vec![
        fact_suite(&mut rng, "mmlu_stem_mini", STEM_FACTS),
        fact_suite(&mut rng, "mmlu_social_mini", SOCIAL_FACTS),
        fact_suite(&mut rng, "mmlu_humanities_mini", HUMANITIES_FACTS),
        fact_suite(&mut rng, "mmlu_other_mini", OTHER_FACTS),
        boolq_suite(&mut rng),
        piqa_suite(&mut rng),
        winogrande_suite(&mut rng),
        hellaswag_suite(&mut rng),
        mathqa_suite(&mut rng),
        mutual_suite(&mut rng),
        race_suite(&mut rng),
    ];
    for family in BIAS_FAMILIES {
        let items = family
            .pairs
            .iter()
            .map(|(group, favored, alternate)| PairItem {
                stereotype: super::facts::bias_sentence(group, favored),
                anti: super::facts::bias_sentence(group, alternate),
            })
            .collect();
        suites.push(
            EvalSuite::new(
                format!("crows_{}_mini", family.name),
                Category::Bias,
                SuiteItems::Pair(items),
            )
            .expect("builtin bias suite"),
        );
    }
    suites
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_has_expected_category_cardinalities() {
        let suites = builtin_suites();
        let count = |c: Category| suites.iter().filter(|s| s.category == c).count();
        assert_eq!(count(Category::DomainKnowledge), 4);
        assert_eq!(count(Category::Reasoning), 6);
        assert_eq!(count(Category::ReadingComprehension), 1);
        assert_eq!(count(Category::Bias), 9);
        assert_eq!(suites.len(), 20);
    }

    #[test]
    fn suites_are_stable_across_calls() {
        assert_eq!(builtin_suites(), builtin_suites());
    }

    #[test]
    fn every_suite_is_nonempty_and_well_formed() {
        for s in builtin_suites() {
            assert!(!s.is_empty(), "{} is empty", s.name);
            if let SuiteItems::Choice(items) = &s.items {
                for item in items {
                    assert!(item.choices.len() >= 2);
                    assert!(item.correct < item.choices.len());
                }
            }
        }
    }

    #[test]
    fn mutual_reports_recall_alias() {
        let suites = builtin_suites();
        let mutual = suites.iter().find(|s| s.name == "mutual_mini").unwrap();
        assert_eq!(mutual.metric_label(), "recall_at_1");
        let boolq = suites.iter().find(|s| s.name == "boolq_mini").unwrap();
        assert_eq!(boolq.metric_label(), "accuracy");
    }
}
