//! Text-overlap metrics: sentence BLEU, ROUGE-1/2/L, and SARI.
//!
//! Tokenization for all of these: lowercase, whitespace split, punctuation
//! detached into single-character tokens. Scores are deterministic pure
//! functions; BLEU and ROUGE live in [0,1], SARI in [0,100].

use std::collections::HashMap;

use super::MetricsError;

/// Metric tokenizer (distinct from the model's byte tokenizer).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.to_lowercase().chars() {
        if ch.is_whitespace() {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
        } else if ch.is_alphanumeric() || ch == '\'' {
            word.push(ch);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut map: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *map.entry(w).or_default() += 1;
        }
    }
    map
}

/// Sentence BLEU with clipped n-gram precision, add-one smoothing on both
/// numerator and denominator for n >= 2, and the closest-reference brevity
/// penalty. An empty hypothesis scores 0 by definition.
pub fn bleu(hypothesis: &str, references: &[&str], max_n: usize) -> Result<f64, MetricsError> {
    if references.is_empty() {
        return Err(MetricsError::NoReferences);
    }
    let hyp = tokenize(hypothesis);
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).collect();
    if hyp.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0f64;
    for n in 1..=max_n {
        let hyp_counts = ngram_counts(&hyp, n);
        let total: usize = hyp_counts.values().sum();
        let mut clipped = 0usize;
        for (gram, &count) in &hyp_counts {
            let best_ref = refs
                .iter()
                .map(|r| ngram_counts(r, n).get(gram).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            clipped += count.min(best_ref);
        }
        let p = if n == 1 {
            if clipped == 0 {
                return Ok(0.0);
            }
            clipped as f64 / total as f64
        } else {
            (clipped + 1) as f64 / (total + 1) as f64
        };
        log_sum += p.ln();
    }
    let geo = (log_sum / max_n as f64).exp();
    let c = hyp.len() as f64;
    let r = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| {
            let diff = (len as i64 - hyp.len() as i64).abs();
            (diff, len)
        })
        .unwrap() as f64;
    let bp = (1.0 - r / c).min(0.0).exp();
    Ok(geo * bp)
}

/// ROUGE-N as an F1 over clipped n-gram overlap.
pub fn rouge_n(hypothesis: &str, reference: &str, n: usize) -> f64 {
    assert!(n >= 1, "rouge_n needs n >= 1");
    let hyp = tokenize(hypothesis);
    let rf = tokenize(reference);
    let hc = ngram_counts(&hyp, n);
    let rc = ngram_counts(&rf, n);
    let overlap: usize = hc
        .iter()
        .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    let hyp_total: usize = hc.values().sum();
    let ref_total: usize = rc.values().sum();
    f1_from_counts(overlap as f64, hyp_total as f64, ref_total as f64)
}

/// ROUGE-L as an F1 over the longest common subsequence.
pub fn rouge_l(hypothesis: &str, reference: &str) -> f64 {
    let hyp = tokenize(hypothesis);
    let rf = tokenize(reference);
    let lcs = lcs_len(&hyp, &rf) as f64;
    f1_from_counts(lcs, hyp.len() as f64, rf.len() as f64)
}

fn f1_from_counts(overlap: f64, hyp_total: f64, ref_total: f64) -> f64 {
    if hyp_total == 0.0 || ref_total == 0.0 {
        return 0.0;
    }
    let p = overlap / hyp_total;
    let r = overlap / ref_total;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// SARI: mean over n = 1..=4 of (F1_add + F1_keep + P_del) / 3, scaled to
/// [0,100]. Keep and delete use fractional reference counts (averaged over
/// references); add uses n-gram presence. A ratio with an empty denominator
/// scores 1 by convention, so the all-empty case scores 1 exactly.
pub fn sari(source: &str, hypothesis: &str, references: &[&str]) -> Result<f64, MetricsError> {
    if references.is_empty() {
        return Err(MetricsError::NoReferences);
    }
    let src = tokenize(source);
    if src.is_empty() {
        return Err(MetricsError::EmptySource);
    }
    let hyp = tokenize(hypothesis);
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).collect();
    let numref = refs.len() as f64;

    let mut total = 0.0f64;
    for n in 1..=4usize {
        let s = ngram_counts(&src, n);
        let h = ngram_counts(&hyp, n);
        let mut r: HashMap<&[String], f64> = HashMap::new();
        for rf in &refs {
            for (g, c) in ngram_counts(rf, n) {
                *r.entry(g).or_default() += c as f64;
            }
        }
        for v in r.values_mut() {
            *v /= numref;
        }

        // KEEP: n-grams retained from the source.
        let mut keep_cand_total = 0.0f64;
        let mut keep_hit = 0.0f64;
        for (g, &sc) in &s {
            let cand = (sc.min(h.get(g).copied().unwrap_or(0))) as f64;
            let gold = (sc as f64).min(r.get(g).copied().unwrap_or(0.0));
            keep_cand_total += cand;
            keep_hit += cand.min(gold);
        }
        let mut keep_gold_total = 0.0f64;
        let mut keep_gold_hit = 0.0f64;
        for (g, &sc) in &s {
            let gold = (sc as f64).min(r.get(g).copied().unwrap_or(0.0));
            let cand = (sc.min(h.get(g).copied().unwrap_or(0))) as f64;
            keep_gold_total += gold;
            keep_gold_hit += gold.min(cand);
        }
        let p_keep = ratio_or_one(keep_hit, keep_cand_total);
        let r_keep = ratio_or_one(keep_gold_hit, keep_gold_total);
        let f1_keep = f1(p_keep, r_keep);

        // DELETE: n-grams dropped from the source; precision only.
        let mut del_cand_total = 0.0f64;
        let mut del_hit = 0.0f64;
        for (g, &sc) in &s {
            let cand = (sc as f64 - h.get(g).copied().unwrap_or(0) as f64).max(0.0);
            let gold = (sc as f64 - r.get(g).copied().unwrap_or(0.0)).max(0.0);
            del_cand_total += cand;
            del_hit += cand.min(gold);
        }
        let p_del = ratio_or_one(del_hit, del_cand_total);

        // ADD: n-grams introduced beyond the source; presence-based.
        let cand_add: Vec<&&[String]> = h.keys().filter(|g| !s.contains_key(*g)).collect();
        let gold_add: Vec<&&[String]> = r.keys().filter(|g| !s.contains_key(*g)).collect();
        let add_hit = cand_add.iter().filter(|g| r.contains_key(**g)).count() as f64;
        let p_add = ratio_or_one(add_hit, cand_add.len() as f64);
        let gold_hit = gold_add.iter().filter(|g| h.contains_key(**g)).count() as f64;
        let r_add = ratio_or_one(gold_hit, gold_add.len() as f64);
        let f1_add = f1(p_add, r_add);

        total += (f1_add + f1_keep + p_del) / 3.0;
    }
    Ok(100.0 * total / 4.0)
}

fn ratio_or_one(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_detaches_punctuation() {
        assert_eq!(
            tokenize("The cat, sat."),
            vec!["the", "cat", ",", "sat", "."]
        );
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn bleu_identity_is_one() {
        let b = bleu("the cat sat on the mat", &["the cat sat on the mat"], 4).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_disjoint_is_zero_and_empty_is_zero() {
        assert_eq!(bleu("aa bb cc", &["dd ee ff"], 4).unwrap(), 0.0);
        assert_eq!(bleu("", &["dd ee ff"], 4).unwrap(), 0.0);
    }

    #[test]
    fn bleu_hand_counted_case() {
        // hyp "the cat sat", ref "the cat sat down":
        // p1 = 3/3; p2 = (2+1)/(2+1); p3 = (1+1)/(1+1); p4 = (0+1)/(0+1);
        // BP = exp(1 - 4/3). Longhand value: exp(-1/3).
        let b = bleu("the cat sat", &["the cat sat down"], 4).unwrap();
        let expect = (-1.0f64 / 3.0).exp();
        assert!((b - expect).abs() < 1e-12, "{b} vs {expect}");
    }

    #[test]
    fn rouge_identity_and_disjoint_bigrams() {
        assert!((rouge_n("a b c", "a b c", 1) - 1.0).abs() < 1e-12);
        assert!((rouge_n("a b c", "a b c", 2) - 1.0).abs() < 1e-12);
        assert!((rouge_l("a b c", "a b c") - 1.0).abs() < 1e-12);
        // "a b c" vs "a c b": no shared bigrams.
        assert_eq!(rouge_n("a b c", "a c b", 2), 0.0);
    }

    #[test]
    fn rouge_l_uses_lcs() {
        // hyp "a b c d", ref "a c b d": LCS = 3 ("a b d" or "a c d").
        let r = rouge_l("a b c d", "a c b d");
        let p = 3.0 / 4.0;
        let expect = 2.0 * p * p / (p + p);
        assert!((r - expect).abs() < 1e-12);
    }

    #[test]
    fn sari_identity_convention() {
        // source == reference == hypothesis: keep = 1, add and delete hit the
        // empty-set convention, so every component is 1 and SARI is 100.
        let s = sari("the cat sat", "the cat sat", &["the cat sat"]).unwrap();
        assert!((s - 100.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn sari_perfect_deletion_has_unit_del_precision() {
        // All references delete "(old)"; the hypothesis deletes exactly that
        // and adds nothing, so delete precision is 1 for every n.
        let src = "the cat ( old ) sat";
        let hyp = "the cat sat";
        let refs = ["the cat sat"];
        let s = sari(src, hyp, &refs).unwrap();
        assert!((s - 100.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn sari_empty_source_is_an_error() {
        assert!(matches!(
            sari("", "a", &["a"]),
            Err(MetricsError::EmptySource)
        ));
        assert!(matches!(sari("a", "a", &[]), Err(MetricsError::NoReferences)));
    }

    #[test]
    fn metrics_stay_in_range() {
        let cases = [
            ("a b", "a b c", "b c"),
            ("x y z w", "x w", "x y w"),
            ("p q", "r s", "t u"),
        ];
        for (src, hyp, rf) in cases {
            let b = bleu(hyp, &[rf], 4).unwrap();
            assert!((0.0..=1.0).contains(&b));
            let r = rouge_n(hyp, rf, 2);
            assert!((0.0..=1.0).contains(&r));
            let s = sari(src, hyp, &[rf]).unwrap();
            assert!((0.0..=100.0).contains(&s));
        }
    }
}
