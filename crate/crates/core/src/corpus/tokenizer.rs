//! Byte-level tokenizer: ids 0..=255 are raw bytes, plus BOS/EOS/PAD
//! specials. No merges, no training, lossless by construction.

use super::CorpusError;

pub const BOS_ID: u32 = 256;
pub const EOS_ID: u32 = 257;
pub const PAD_ID: u32 = 258;
pub const VOCAB_SIZE: usize = 259;

/// Stateless byte tokenizer. Exists as a type so call sites carry the vocab
/// convention rather than scattering magic ids.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tokenizer;

impl Tokenizer {
    pub fn vocab_size(&self) -> usize {
        VOCAB_SIZE
    }

    /// Encodes text as its UTF-8 bytes. Never emits specials.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        text.bytes().map(u32::from).collect()
    }

    pub fn encode_bytes(&self, bytes: &[u8]) -> Vec<u32> {
        bytes.iter().map(|&b| u32::from(b)).collect()
    }

    /// Decodes ids to bytes, stripping specials. Unknown ids are an error.
    pub fn decode_bytes(&self, ids: &[u32]) -> Result<Vec<u8>, CorpusError> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            match id {
                0..=255 => out.push(id as u8),
                BOS_ID | EOS_ID | PAD_ID => {}
                other => return Err(CorpusError::UnknownTokenId(other)),
            }
        }
        Ok(out)
    }

    /// Decodes to text; invalid UTF-8 byte runs are replaced (byte streams
    /// produced by generation need not align to character boundaries).
    pub fn decode(&self, ids: &[u32]) -> Result<String, CorpusError> {
        let bytes = self.decode_bytes(ids)?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_text() {
        let tk = Tokenizer;
        assert_eq!(tk.decode(&tk.encode("hello")).unwrap(), "hello");
        assert_eq!(tk.encode(""), Vec::<u32>::new());
    }

    #[test]
    fn every_byte_round_trips() {
        let tk = Tokenizer;
        let all: Vec<u8> = (0..=255).collect();
        let ids = tk.encode_bytes(&all);
        assert_eq!(tk.decode_bytes(&ids).unwrap(), all);
    }

    #[test]
    fn specials_are_stripped_and_never_encoded() {
        let tk = Tokenizer;
        let ids = vec![BOS_ID, b'h'.into(), EOS_ID, b'i'.into(), PAD_ID];
        assert_eq!(tk.decode(&ids).unwrap(), "hi");
        assert!(tk.encode("hi").iter().all(|&id| id < 256));
    }

    #[test]
    fn unknown_id_is_an_error() {
        let tk = Tokenizer;
        assert!(matches!(
            tk.decode(&[259]),
            Err(CorpusError::UnknownTokenId(259))
        ));
    }
}
