//! Next-token batch construction from variable-length masked sequences.
//!
//! A sample is a token sequence plus a same-length boolean loss mask marking
//! which tokens are training targets. Sequences are padded to the batch
//! maximum; padded target positions are masked out, so every real masked-in
//! token is trained exactly once.

use super::ModelError;

#[derive(Debug, Clone)]
pub struct BuiltBatch {
    /// Flattened inputs, n_seqs × seq_len.
    pub inputs: Vec<u32>,
    /// Gold next-token id per input position.
    pub targets: Vec<u32>,
    /// True where the target participates in the loss.
    pub mask: Vec<bool>,
    pub n_seqs: usize,
    pub seq_len: usize,
}

pub(crate) fn build_batch(
    seqs: &[(&[u32], &[bool])],
    pad_id: u32,
    vocab: usize,
    max_seq_len: usize,
) -> Result<BuiltBatch, ModelError> {
    if seqs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut max_len = 0usize;
    for (tokens, mask) in seqs {
        assert_eq!(
            tokens.len(),
            mask.len(),
            "loss mask length must equal sequence length"
        );
        if tokens.len() > max_seq_len {
            return Err(ModelError::SequenceTooLong {
                len: tokens.len(),
                max: max_seq_len,
            });
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= vocab) {
            return Err(ModelError::TokenOutOfRange { id: bad, vocab });
        }
        max_len = max_len.max(tokens.len());
    }
    if max_len < 2 {
        return Err(ModelError::DegenerateBatch);
    }
    let seq_len = max_len - 1;
    let n_seqs = seqs.len();
    let mut inputs = vec![pad_id; n_seqs * seq_len];
    let mut targets = vec![pad_id; n_seqs * seq_len];
    let mut mask = vec![false; n_seqs * seq_len];
    let mut any_target = false;
    for (s, (tokens, m)) in seqs.iter().enumerate() {
        let n = tokens.len();
        if n < 2 {
            continue;
        }
        let base = s * seq_len;
        inputs[base..base + n - 1].copy_from_slice(&tokens[..n - 1]);
        targets[base..base + n - 1].copy_from_slice(&tokens[1..]);
        for (dst, &src) in mask[base..base + n - 1].iter_mut().zip(&m[1..]) {
            *dst = src;
            any_target |= src;
        }
    }
    if !any_target {
        return Err(ModelError::DegenerateBatch);
    }
    Ok(BuiltBatch {
        inputs,
        targets,
        mask,
        n_seqs,
        seq_len,
    })
}
