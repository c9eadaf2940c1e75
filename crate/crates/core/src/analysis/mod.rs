//! Corpus and embedding diagnostics: word-frequency categories and their
//! comparison across corpora, anisotropy of a set of vectors, and an export
//! of embedding rows labelled with frequency categories for plotting.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::seed;
use crate::transfer::EmbeddingMatrix;
use crate::wordpiece::Vocab;

pub const CATEGORY_NAMES: [&str; 4] = ["rare", "low", "mid", "high"];

/// Three ascending cut points splitting raw counts into four half-open
/// categories: `[1, b0)`, `[b0, b1)`, `[b1, b2)` and `[b2, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u64; 3]", into = "[u64; 3]")]
pub struct Boundaries([u64; 3]);

impl Boundaries {
    pub fn new(b: [u64; 3]) -> Result<Self> {
        if b[0] == 0 || b[0] >= b[1] || b[1] >= b[2] {
            return Err(Error::InvalidArgument(format!(
                "boundaries {b:?} must be positive and strictly ascending"
            )));
        }
        Ok(Self(b))
    }

    pub fn get(&self) -> [u64; 3] {
        self.0
    }

    pub fn category(&self, count: u64) -> usize {
        self.0.iter().take_while(|&&b| count >= b).count()
    }

    /// Human-readable range of category `i`.
    pub fn range_label(&self, i: usize) -> String {
        let b = self.0;
        match i {
            0 => format!("[1,{})", b[0]),
            1 | 2 => format!("[{},{})", b[i - 1], b[i]),
            _ => format!("[{},inf)", b[2]),
        }
    }
}

impl Default for Boundaries {
    fn default() -> Self {
        Self([10, 100, 1000])
    }
}

impl TryFrom<[u64; 3]> for Boundaries {
    type Error = Error;

    fn try_from(b: [u64; 3]) -> Result<Self> {
        Self::new(b)
    }
}

impl From<Boundaries> for [u64; 3] {
    fn from(b: Boundaries) -> Self {
        b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyHistogram {
    pub boundaries: Boundaries,
    /// Distinct words per category.
    pub counts: [u64; 4],
}

impl FrequencyHistogram {
    pub fn distinct(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn bucket_frequencies(table: &FrequencyTable, boundaries: Boundaries) -> FrequencyHistogram {
    let mut counts = [0u64; 4];
    for (_, c) in table.iter() {
        counts[boundaries.category(c)] += 1;
    }
    FrequencyHistogram { boundaries, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusComparison {
    pub a: FrequencyHistogram,
    pub b: FrequencyHistogram,
    /// `b / a` per category; `None` where `a` has no words.
    pub ratios: [Option<f64>; 4],
    /// Words present in both tables.
    pub shared_words: u64,
    pub zero_overlap: bool,
}

pub fn compare_corpora(
    a: &FrequencyTable,
    b: &FrequencyTable,
    boundaries: Boundaries,
) -> CorpusComparison {
    let ha = bucket_frequencies(a, boundaries);
    let hb = bucket_frequencies(b, boundaries);
    let ratios = std::array::from_fn(|i| {
        (ha.counts[i] > 0).then(|| hb.counts[i] as f64 / ha.counts[i] as f64)
    });
    let (small, large) = if a.distinct() <= b.distinct() {
        (a, b)
    } else {
        (b, a)
    };
    let shared_words = small.iter().filter(|(w, _)| large.get(w) > 0).count() as u64;
    CorpusComparison {
        a: ha,
        b: hb,
        ratios,
        shared_words,
        zero_overlap: shared_words == 0,
    }
}

impl CorpusComparison {
    /// TSV with one row per category: name, range, both counts and the ratio.
    pub fn to_tsv(&self, name_a: &str, name_b: &str) -> String {
        let mut out = format!("category\trange\t{name_a}\t{name_b}\tratio\n");
        for (i, name) in CATEGORY_NAMES.iter().enumerate() {
            let ratio = self.ratios[i].map_or_else(|| "NA".to_string(), |r| r.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                name,
                self.a.boundaries.range_label(i),
                self.a.counts[i],
                self.b.counts[i],
                ratio
            )
            .unwrap();
        }
        out
    }

    /// Writes the TSV report to `path` and a JSON summary next to it.
    pub fn write(&self, name_a: &str, name_b: &str, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv(name_a, name_b)).map_err(|e| Error::io(path, e))?;
        let json_path = path.with_extension("json");
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))
    }
}

fn cosine(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    let dot: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .collect::<KahanSum>()
        .value();
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

/// Index pair of the `k`-th unordered pair `(i, j)`, `i < j`, in
/// row-major order over `n` items.
fn pair_at(k: u64, n: u64) -> (usize, usize) {
    let offset = |i: u64| i * (2 * n - i - 1) / 2;
    let b = (2 * n - 1) as f64;
    let mut i = ((b - (b * b - 8.0 * k as f64).max(0.0).sqrt()) / 2.0).floor() as u64;
    i = i.min(n - 2);
    while i > 0 && offset(i) > k {
        i -= 1;
    }
    while i + 1 < n - 1 && offset(i + 1) <= k {
        i += 1;
    }
    (i as usize, (i + 1 + k - offset(i)) as usize)
}

/// Mean cosine similarity over `pairs` distinct unordered pairs drawn
/// uniformly with `seed`. If `pairs` covers every pair the mean is exact.
pub fn anisotropy<V: AsRef<[f32]> + Sync>(vectors: &[V], pairs: usize, seed: u64) -> Result<f64> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "anisotropy needs at least two vectors".into(),
        ));
    }
    if pairs == 0 {
        return Err(Error::InvalidArgument("pairs must be at least 1".into()));
    }
    let dim = vectors[0].as_ref().len();
    let wide: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.as_ref().iter().map(|&x| x as f64).collect())
        .collect();
    let mut norms = Vec::with_capacity(n);
    for (i, v) in wide.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: v.len(),
            });
        }
        let norm = v.iter().map(|x| x * x).collect::<KahanSum>().value();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector(i));
        }
        norms.push(norm);
    }
    let total = (n as u64) * (n as u64 - 1) / 2;
    let indices: Vec<u64> = if pairs as u64 >= total {
        (0..total).collect()
    } else {
        let mut rng = seed::rng(seed);
        let mut s: Vec<u64> = rand::seq::index::sample(&mut rng, total as usize, pairs)
            .into_iter()
            .map(|k| k as u64)
            .collect();
        s.sort_unstable();
        s
    };
    let cosines: Vec<f64> = indices
        .par_iter()
        .map(|&k| {
            let (i, j) = pair_at(k, n as u64);
            cosine(&wide[i], &wide[j], norms[i], norms[j])
        })
        .collect();
    Ok(cosines.iter().copied().collect::<KahanSum>().value() / cosines.len() as f64)
}

/// Writes one TSV row per vocabulary entry, without a header: token, raw
/// corpus frequency (0 when absent), frequency category, then the row's
/// components. The rows are input embeddings; projecting contextual
/// representations instead would need an encoder and is left to the caller.
pub fn export_freq_stratified(
    matrix: &EmbeddingMatrix,
    table: &FrequencyTable,
    vocab: &Vocab,
    boundaries: Boundaries,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if matrix.len() != vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "matrix has {} rows for a vocabulary of {}",
            matrix.len(),
            vocab.len()
        )));
    }
    let mut out = String::new();
    for (id, token) in vocab.tokens().iter().enumerate() {
        let freq = table.get(token);
        write!(
            out,
            "{token}\t{freq}\t{}",
            CATEGORY_NAMES[boundaries.category(freq)]
        )
        .unwrap();
        for x in matrix.row(id).expect("row count checked") {
            write!(out, "\t{x}").unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Distinct words per table that never appear in the other.
pub fn exclusive_words(a: &FrequencyTable, b: &FrequencyTable) -> (usize, usize) {
    let wa: HashSet<&str> = a.iter().map(|(w, _)| w).collect();
    let wb: HashSet<&str> = b.iter().map(|(w, _)| w).collect();
    (wa.difference(&wb).count(), wb.difference(&wa).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[(&str, u64)]) -> FrequencyTable {
        let mut t = FrequencyTable::new();
        for (w, c) in entries {
            t.add(*w, *c);
        }
        t
    }

    #[test]
    fn direct_placement() {
        let h = bucket_frequencies(
            &table(&[("a", 3), ("b", 1)]),
            Boundaries::new([2, 5, 10]).unwrap(),
        );
        assert_eq!(h.counts, [1, 1, 0, 0]);
        assert_eq!(
            bucket_frequencies(&FrequencyTable::new(), Boundaries::default()).counts,
            [0; 4]
        );
    }

    #[test]
    fn boundaries_are_half_open() {
        let b = Boundaries::default();
        assert_eq!(b.category(1), 0);
        assert_eq!(b.category(9), 0);
        assert_eq!(b.category(10), 1);
        assert_eq!(b.category(999), 2);
        assert_eq!(b.category(1000), 3);
        assert!(Boundaries::new([5, 5, 10]).is_err());
        assert!(Boundaries::new([0, 5, 10]).is_err());
    }

    #[test]
    fn comparison_identical_and_disjoint() {
        let a = table(&[("x", 3), ("y", 40)]);
        let c = compare_corpora(&a, &a, Boundaries::default());
        assert_eq!(c.a, c.b);
        assert_eq!(c.ratios[0], Some(1.0));
        assert_eq!(c.ratios[3], None);
        assert!(!c.zero_overlap);
        let d = compare_corpora(&a, &table(&[("z", 1)]), Boundaries::default());
        assert!(d.zero_overlap);
        assert_eq!(exclusive_words(&a, &table(&[("z", 1), ("x", 2)])), (1, 1));
    }

    #[test]
    fn pair_indexing_covers_all_pairs() {
        let n = 7u64;
        let mut seen = Vec::new();
        for k in 0..n * (n - 1) / 2 {
            seen.push(pair_at(k, n));
        }
        let mut expected = Vec::new();
        for i in 0..n as usize {
            for j in i + 1..n as usize {
                expected.push((i, j));
            }
        }
        assert_eq!(seen, expected);
    }

    #[test]
    fn anisotropy_edge_cases() {
        let same = vec![vec![0.3f32, -1.7, 2.9]; 5];
        assert_eq!(anisotropy(&same, 100, 0).unwrap(), 1.0);
        let orth = [vec![1.0f32, 0.0], vec![0.0, 2.0]];
        assert_eq!(anisotropy(&orth, 1, 0).unwrap(), 0.0);
        let zero = [vec![1.0f32, 0.0], vec![0.0, 0.0]];
        assert!(matches!(anisotropy(&zero, 1, 0), Err(Error::ZeroVector(1))));
    }
}
