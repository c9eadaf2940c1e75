use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::normalize::{pre_tokenize, TokenizerOptions};
use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

/// The five reserved tokens, in the order a freshly trained vocabulary lays them out.
pub const SPECIAL_TOKENS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

pub const CONTINUATION_PREFIX: &str = "##";

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialIds {
    pub pad: TokenId,
    pub unk: TokenId,
    pub cls: TokenId,
    pub sep: TokenId,
    pub mask: TokenId,
}

impl SpecialIds {
    pub fn all(&self) -> [TokenId; 5] {
        [self.pad, self.unk, self.cls, self.sep, self.mask]
    }
}

/// An immutable WordPiece vocabulary: token strings with dense ids plus the
/// pre-tokenizer settings used to encode text against it.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    specials: SpecialIds,
    special_mask: Vec<bool>,
    options: TokenizerOptions,
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.options == other.options
    }
}

impl Vocab {
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_options(tokens, TokenizerOptions::default())
    }

    pub fn with_options<I, S>(tokens: I, options: TokenizerOptions) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.len() > TokenId::MAX as usize {
            return Err(Error::Vocab("too many tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(Error::Vocab(format!("empty token at id {id}")));
            }
            if token.contains(['\n', '\r']) {
                return Err(Error::Vocab(format!(
                    "token at id {id} contains a line break"
                )));
            }
            if index.insert(token.clone(), id as TokenId).is_some() {
                return Err(Error::Vocab(format!("duplicate token `{token}`")));
            }
        }
        let find = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::Vocab(format!("special token {s} missing")))
        };
        let specials = SpecialIds {
            pad: find(PAD)?,
            unk: find(UNK)?,
            cls: find(CLS)?,
            sep: find(SEP)?,
            mask: find(MASK)?,
        };
        let mut special_mask = vec![false; tokens.len()];
        for id in specials.all() {
            special_mask[id as usize] = true;
        }
        Ok(Self {
            tokens,
            index,
            specials,
            special_mask,
            options,
        })
    }

    /// Reads a `vocab.txt` file: one token per line, line number = id.
    pub fn load(path: impl AsRef<Path>, options: TokenizerOptions) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        Self::with_options(lines, options)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for token in &self.tokens {
            writeln!(out, "{token}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn specials(&self) -> SpecialIds {
        self.specials
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        self.special_mask.get(id as usize).copied().unwrap_or(false)
    }

    pub fn is_continuation(&self, id: TokenId) -> bool {
        self.token(id)
            .is_some_and(|t| t.starts_with(CONTINUATION_PREFIX) && !self.is_special(id))
    }

    pub fn options(&self) -> &TokenizerOptions {
        &self.options
    }

    /// SHA-256 over the newline-joined token list.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for token in &self.tokens {
            hasher.update(token.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// Greedy longest-match-first segmentation of one already normalized word.
    ///
    /// When `continuation` is set the first piece must itself carry the `##`
    /// prefix, which is how a word-internal piece of another vocabulary is
    /// re-segmented. Returns `None` when some remainder has no match.
    pub fn wordpiece(&self, word: &str, continuation: bool) -> Option<Vec<TokenId>> {
        if word.chars().count() > self.options.max_word_chars {
            return None;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut candidate = String::with_capacity(word.len() + 2);
        while start < word.len() {
            let rest = &word[start..];
            let prefixed = start > 0 || continuation;
            let mut found = None;
            // walk candidate ends from longest to shortest char boundary
            let mut ends: Vec<usize> = rest.char_indices().map(|(i, _)| i).skip(1).collect();
            ends.push(rest.len());
            for &end in ends.iter().rev() {
                candidate.clear();
                if prefixed {
                    candidate.push_str(CONTINUATION_PREFIX);
                }
                candidate.push_str(&rest[..end]);
                if let Some(id) = self.id(&candidate) {
                    found = Some((id, end));
                    break;
                }
            }
            let (id, len) = found?;
            pieces.push(id);
            start += len;
        }
        Some(pieces)
    }

    fn encode_word_into(&self, word: &str, out: &mut Vec<TokenId>) {
        match self.wordpiece(word, false) {
            Some(pieces) => out.extend(pieces),
            None => out.push(self.specials.unk),
        }
    }

    /// Normalizes, splits and WordPiece-encodes `text`. No `[CLS]`/`[SEP]` are added.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut ids = Vec::new();
        for word in pre_tokenize(text, &self.options) {
            self.encode_word_into(&word, &mut ids);
        }
        ids
    }

    /// Like [`Vocab::encode`] but keeps the pieces of each word together.
    pub fn encode_words(&self, text: &str) -> Vec<Vec<TokenId>> {
        pre_tokenize(text, &self.options)
            .iter()
            .map(|word| {
                let mut ids = Vec::with_capacity(2);
                self.encode_word_into(word, &mut ids);
                ids
            })
            .collect()
    }

    pub fn tokenize(&self, text: &str) -> Vec<&str> {
        self.encode(text)
            .into_iter()
            .map(|id| self.tokens[id as usize].as_str())
            .collect()
    }

    /// Joins pieces back into space-separated words, gluing `##` continuations.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        let mut out = String::new();
        for &id in ids {
            let Some(token) = self.token(id) else {
                continue;
            };
            match token.strip_prefix(CONTINUATION_PREFIX) {
                Some(rest) if !self.is_special(id) && !out.is_empty() => out.push_str(rest),
                _ => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(token);
                }
            }
        }
        out
    }
}
