use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::source::CorpusSource;
use crate::error::{Error, Result};

/// Raw word counts. Words are case-folded, whitespace separated and stripped
/// of leading and trailing non-alphanumeric characters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

/// Normalizes a raw whitespace-delimited token into a counted word, if any.
pub fn normalize_word(raw: &str) -> Option<String> {
    let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_lowercase())
    }
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: impl Into<String>, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(word.into()).or_default() += count;
        self.total += count;
    }

    pub fn add_text(&mut self, text: &str) {
        for raw in text.split_whitespace() {
            if let Some(w) = normalize_word(raw) {
                self.add(w, 1);
            }
        }
    }

    pub fn merge(&mut self, other: FrequencyTable) {
        for (w, c) in other.counts {
            *self.counts.entry(w).or_default() += c;
        }
        self.total += other.total;
    }

    pub fn get(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, c)| (w.as_str(), *c))
    }

    /// Entries by count descending, ties broken lexicographically.
    pub fn sorted(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<_> = self.iter().collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }

    /// Writes `word \t count` lines in [`sorted`](Self::sorted) order.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (w, c) in self.sorted() {
            writeln!(out, "{w}\t{c}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = Self::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or_else(|| {
                Error::Parse(format!(
                    "{}:{}: expected word<TAB>count",
                    path.display(),
                    n + 1
                ))
            })?;
            let count: u64 = count.parse().map_err(|_| {
                Error::Parse(format!("{}:{}: bad count `{count}`", path.display(), n + 1))
            })?;
            table.add(word, count);
        }
        Ok(table)
    }
}

impl FromIterator<(String, u64)> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = (String, u64)>>(iter: I) -> Self {
        let mut table = Self::new();
        for (w, c) in iter {
            table.add(w, c);
        }
        table
    }
}

/// Exact word counts over the corpus; per-chunk tables are summed, so the
/// result does not depend on `workers`.
pub fn count_frequencies(corpus: &CorpusSource, workers: usize) -> Result<FrequencyTable> {
    let partials = corpus.map_chunks(workers, |chunk| {
        let mut table = FrequencyTable::new();
        for doc in chunk.docs {
            table.add_text(doc);
        }
        table
    })?;
    let mut total = FrequencyTable::new();
    for part in partials {
        total.merge(part);
    }
    Ok(total)
}
