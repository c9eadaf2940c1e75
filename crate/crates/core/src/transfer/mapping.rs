use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::wordpiece::{TokenId, Vocab, SPECIAL_TOKENS};

/// Split of a domain vocabulary into tokens shared with the base vocabulary
/// (exact string match) and new tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMapping {
    /// `(domain id, base id)` in domain id order.
    pub shared: Vec<(TokenId, TokenId)>,
    /// Domain ids absent from the base vocabulary, in id order.
    pub new: Vec<TokenId>,
    base_of: Vec<Option<TokenId>>,
}

impl TokenMapping {
    pub fn domain_size(&self) -> usize {
        self.base_of.len()
    }

    pub fn coverage_ratio(&self) -> f64 {
        if self.base_of.is_empty() {
            return 0.0;
        }
        self.shared.len() as f64 / self.base_of.len() as f64
    }

    pub fn base_id(&self, domain_id: TokenId) -> Option<TokenId> {
        self.base_of.get(domain_id as usize).copied().flatten()
    }

    pub fn is_new(&self, domain_id: TokenId) -> bool {
        (domain_id as usize) < self.base_of.len() && self.base_of[domain_id as usize].is_none()
    }

    /// `domain_id \t token \t base_id` with `-` for new tokens.
    pub fn write_tsv(&self, domain: &Vocab, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (id, token) in domain.tokens().iter().enumerate() {
            let base = self
                .base_of
                .get(id)
                .copied()
                .flatten()
                .map_or_else(|| "-".to_string(), |b| b.to_string());
            writeln!(out, "{id}\t{token}\t{base}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Exact string intersection of the two vocabularies.
pub fn diff_vocab(domain: &Vocab, base: &Vocab) -> Result<TokenMapping> {
    for special in SPECIAL_TOKENS {
        for (name, v) in [("domain", domain), ("base", base)] {
            if !v.contains(special) {
                return Err(Error::Vocab(format!("{name} vocabulary lacks {special}")));
            }
        }
    }
    let mut shared = Vec::new();
    let mut new = Vec::new();
    let mut base_of = Vec::with_capacity(domain.len());
    for (id, token) in domain.tokens().iter().enumerate() {
        let id = id as TokenId;
        match base.id(token) {
            Some(b) => {
                shared.push((id, b));
                base_of.push(Some(b));
            }
            None => {
                new.push(id);
                base_of.push(None);
            }
        }
    }
    Ok(TokenMapping {
        shared,
        new,
        base_of,
    })
}
