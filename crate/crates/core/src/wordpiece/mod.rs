//! WordPiece tokenization: vocabulary, greedy encoder, trainer and the
//! word grouping used by whole-word masking.

mod normalize;
mod trainer;
mod vocab;

pub use normalize::{is_punctuation, pre_tokenize, TokenizerOptions};
pub use trainer::{train_vocab, TrainerConfig};
pub use vocab::{
    SpecialIds, TokenId, Vocab, CLS, CONTINUATION_PREFIX, MASK, PAD, SEP, SPECIAL_TOKENS, UNK,
};

use std::ops::Range;

use crate::error::{Error, Result};

/// Subtoken ranges of the surface words in a sequence, specials excluded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordGroup {
    pub ranges: Vec<Range<usize>>,
}

impl WordGroup {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn covered_positions(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).sum()
    }
}

/// Groups each head token with the `##` continuations that follow it.
///
/// A continuation with no head in front of it (at the start of the sequence or
/// right after a special token) is an error.
pub fn word_groups(ids: &[TokenId], vocab: &Vocab) -> Result<WordGroup> {
    let mut ranges: Vec<Range<usize>> = Vec::new();
    let mut open = false;
    for (pos, &id) in ids.iter().enumerate() {
        if vocab.is_special(id) {
            open = false;
            continue;
        }
        if vocab.is_continuation(id) {
            if !open {
                return Err(Error::DanglingContinuation(pos));
            }
            ranges.last_mut().expect("open group").end = pos + 1;
        } else {
            ranges.push(pos..pos + 1);
            open = true;
        }
    }
    Ok(WordGroup { ranges })
}
