//! Text normalization and word splitting that runs before subword matching.

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Knobs of the pre-tokenizer. Defaults reproduce an uncased BERT-style setup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerOptions {
    pub lowercase: bool,
    /// Decompose to NFD and drop combining marks.
    pub strip_accents: bool,
    /// Surround every CJK ideograph with whitespace so each becomes its own word.
    pub split_cjk: bool,
    /// Words longer than this (in chars) encode to a single `[UNK]`.
    pub max_word_chars: usize,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_accents: true,
            split_cjk: true,
            max_word_chars: 100,
        }
    }
}

fn is_control(c: char) -> bool {
    if c == '\t' || c == '\n' || c == '\r' {
        return false;
    }
    c.is_control()
}

pub(crate) fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2B73F
        | 0x2B740..=0x2B81F
        | 0x2B820..=0x2CEAF
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}

/// ASCII punctuation plus the common Unicode punctuation blocks.
///
/// Mathematical and other symbols (`∆`, `±`, ...) are deliberately not
/// punctuation, so a run of them stays one word.
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(c as u32,
        0x00A1 | 0x00A7 | 0x00AB | 0x00B6 | 0x00B7 | 0x00BB | 0x00BF
        | 0x037E | 0x0387
        | 0x2010..=0x2027
        | 0x2030..=0x205E
        | 0x2E00..=0x2E4F
        | 0x3001..=0x3003
        | 0x3008..=0x3011
        | 0x3014..=0x301F
        | 0xFE10..=0xFE19
        | 0xFE30..=0xFE4F
        | 0xFF01..=0xFF03
        | 0xFF05..=0xFF0A
        | 0xFF0C..=0xFF0F
        | 0xFF1A | 0xFF1B | 0xFF1F | 0xFF20
        | 0xFF3B..=0xFF3D | 0xFF3F | 0xFF5B | 0xFF5D)
}

fn normalize_word(word: &str, options: &TokenizerOptions) -> String {
    let lowered = if options.lowercase {
        word.to_lowercase()
    } else {
        word.to_owned()
    };
    if options.strip_accents {
        lowered.nfd().filter(|c| !is_combining_mark(*c)).collect()
    } else {
        lowered
    }
}

/// Splits raw text into normalized words: whitespace separated, with every
/// punctuation character forming a word of its own.
pub fn pre_tokenize(text: &str, options: &TokenizerOptions) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars() {
        if c == '\0' || c == '\u{FFFD}' || is_control(c) {
            continue;
        }
        if c.is_whitespace() {
            cleaned.push(' ');
        } else if options.split_cjk && is_cjk(c) {
            cleaned.push(' ');
            cleaned.push(c);
            cleaned.push(' ');
        } else {
            cleaned.push(c);
        }
    }

    let mut words = Vec::new();
    for raw in cleaned.split_whitespace() {
        let word = normalize_word(raw, options);
        let mut current = String::new();
        for c in word.chars() {
            if is_punctuation(c) {
                if !current.is_empty() {
                    words.push(std::mem::take(&mut current));
                }
                words.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
    }
    words
}
