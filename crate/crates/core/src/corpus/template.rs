//! Instruction templating with response-only loss masks.
//!
//! Every training sample is wrapped in one fixed general preamble; the loss
//! mask is true exactly on the output tokens and the trailing EOS, so prompts
//! never contribute to the loss.

use super::tokenizer::{Tokenizer, BOS_ID, EOS_ID};
use super::{CorpusError, InstructionSample};

/// The universal preamble prepended to every instruction-formatted sample.
pub const PREAMBLE: &str = "Below is an instruction that describes a task, paired with an input that provides further context. Write a response that appropriately completes the request. ";

/// Marker separating the prompt from the response text.
pub const RESPONSE_MARKER: &str = " ###Response:";

/// Identifier of the single general template.
pub const TEMPLATE_ID: &str = "general";

/// Renders the prompt text (everything before the output).
pub fn render_prompt(sample: &InstructionSample) -> String {
    let mut s = String::with_capacity(
        PREAMBLE.len() + sample.instruction.len() + sample.input.len() + RESPONSE_MARKER.len() + 1,
    );
    s.push_str(PREAMBLE);
    s.push_str(&sample.instruction);
    if !sample.input.is_empty() {
        s.push('\n');
        s.push_str(&sample.input);
    }
    s.push_str(RESPONSE_MARKER);
    s
}

/// Tokenized sample: BOS ++ prompt ++ output ++ EOS, with the mask true on
/// output tokens and EOS only. Over-length samples are an error so callers
/// can skip and count them.
pub fn apply_template(
    sample: &InstructionSample,
    tokenizer: &Tokenizer,
    max_seq_len: usize,
) -> Result<(Vec<u32>, Vec<bool>), CorpusError> {
    let prompt = render_prompt(sample);
    let prompt_ids = tokenizer.encode(&prompt);
    let output_ids = tokenizer.encode(&sample.output);
    let total = 1 + prompt_ids.len() + output_ids.len() + 1;
    if total > max_seq_len {
        return Err(CorpusError::SampleTooLong {
            rendered: total,
            max: max_seq_len,
        });
    }
    let mut tokens = Vec::with_capacity(total);
    let mut mask = Vec::with_capacity(total);
    tokens.push(BOS_ID);
    mask.push(false);
    tokens.extend_from_slice(&prompt_ids);
    mask.extend(std::iter::repeat(false).take(prompt_ids.len()));
    tokens.extend_from_slice(&output_ids);
    mask.extend(std::iter::repeat(true).take(output_ids.len()));
    tokens.push(EOS_ID);
    mask.push(true);
    Ok((tokens, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(instruction: &str, input: &str, output: &str) -> InstructionSample {
        InstructionSample {
            instruction: instruction.to_string(),
            input: input.to_string(),
            output: output.to_string(),
        }
    }

    #[test]
    fn mask_counts_output_plus_eos() {
        let tk = Tokenizer;
        let s = sample("Add:", "2 and 3", "five");
        let (tokens, mask) = apply_template(&s, &tk, 512).unwrap();
        assert_eq!(tokens.len(), mask.len());
        let masked: usize = mask.iter().filter(|&&m| m).count();
        assert_eq!(masked, tk.encode("five").len() + 1);
    }

    #[test]
    fn rendered_text_begins_with_preamble() {
        let s = sample("Do a thing:", "x", "y");
        let prompt = render_prompt(&s);
        assert!(prompt.starts_with("Below is an instruction that describes a task"));
        assert!(prompt.ends_with("###Response:"));
    }

    #[test]
    fn empty_input_omits_input_block() {
        let with = render_prompt(&sample("inst", "inp", "o"));
        let without = render_prompt(&sample("inst", "", "o"));
        assert!(with.contains("inst\ninp"));
        assert!(without.contains("inst"));
        assert!(!without.contains('\n'));
    }

    #[test]
    fn over_length_sample_is_an_error() {
        let tk = Tokenizer;
        let s = sample("i", "", &"x".repeat(100));
        let err = apply_template(&s, &tk, 64).unwrap_err();
        assert!(matches!(err, CorpusError::SampleTooLong { .. }));
    }

    #[test]
    fn prompt_tokens_are_never_masked_in() {
        let tk = Tokenizer;
        let s = sample("Rewrite:", "the cat", "a cat");
        let (tokens, mask) = apply_template(&s, &tk, 512).unwrap();
        let prompt_len = 1 + tk.encode(&render_prompt(&s)).len();
        assert!(mask[..prompt_len].iter().all(|&m| !m));
        assert!(mask[prompt_len..].iter().all(|&m| m));
        assert_eq!(tokens[0], BOS_ID);
        assert_eq!(*tokens.last().unwrap(), EOS_ID);
    }
}
