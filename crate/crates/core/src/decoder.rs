//! Buffer-rule decoding of labeled subwords back into words.

use crate::bpe::SubwordSequence;
use crate::corpus::SegmentedSentence;
use crate::error::{Error, Result};
use crate::labeler::LabelTag;

/// Emits the buffered pieces as a word on `E`, `-E` or `S`; whatever is
/// left in the buffer at the end becomes the last word. Never fails on a
/// label sequence of the right length.
pub fn decode(tokens: &SubwordSequence, labels: &[LabelTag]) -> Result<SegmentedSentence> {
    let texts: Vec<&str> = tokens.tokens().iter().map(|t| t.text.as_str()).collect();
    decode_texts(&texts, labels)
}

pub fn decode_texts(pieces: &[&str], labels: &[LabelTag]) -> Result<SegmentedSentence> {
    if pieces.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: pieces.len(),
            right: labels.len(),
        });
    }
    let mut words = Vec::new();
    let mut buffer = String::new();
    for (piece, label) in pieces.iter().zip(labels) {
        buffer.push_str(piece);
        if label.closes_word() && !buffer.is_empty() {
            words.push(std::mem::take(&mut buffer));
        }
    }
    if !buffer.is_empty() {
        words.push(buffer);
    }
    SegmentedSentence::new(words)
}
