use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::reservoir::Reservoir;
use super::segment::Segmenter;
use super::source::CorpusSource;
use crate::error::{Error, Result};
use crate::seed;
use crate::wordpiece::{TokenId, Vocab};

/// Lower and upper bound of the per-token number of sampled sentences.
pub const CONTEXT_COUNT_MIN: usize = 1;
pub const CONTEXT_COUNT_MAX: usize = 20;

/// Half-open subtoken range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// Where a sentence came from: shard index, line offset in the shard and
/// sentence index within that line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HitSource {
    pub shard: usize,
    pub offset: u64,
    pub sentence: u32,
}

/// A sampled sentence (domain token ids) with every span at which the target
/// token occurs in it. The sentence counts once toward sampling; each span
/// is one occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceHit {
    pub sentence: Arc<[TokenId]>,
    pub spans: Vec<Span>,
    pub source: HitSource,
}

/// Sampling outcome for one target token.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenHits {
    /// Sentences in corpus order.
    pub hits: Vec<SentenceHit>,
    /// Number of qualifying sentences in the corpus.
    pub qualifying: u64,
    /// Sample size drawn for this token.
    pub sample_size: usize,
}

impl TokenHits {
    pub fn occurrences(&self) -> usize {
        self.hits.iter().map(|h| h.spans.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScanResult {
    pub shards: Vec<String>,
    pub tokens: BTreeMap<String, TokenHits>,
}

impl ScanResult {
    pub fn get(&self, token: &str) -> Option<&TokenHits> {
        self.tokens.get(token)
    }

    /// Fraction of scanned tokens with no qualifying sentence.
    pub fn unfound_fraction(&self) -> f64 {
        if self.tokens.is_empty() {
            return 0.0;
        }
        let missing = self.tokens.values().filter(|t| t.qualifying == 0).count();
        missing as f64 / self.tokens.len() as f64
    }
}

/// How many sentences to keep per token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextCount {
    /// Uniform in `[1, cap]`, drawn independently per token.
    #[default]
    Uniform,
    /// Always `cap`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanOptions {
    pub cap: usize,
    pub count: ContextCount,
    pub seed: u64,
    pub workers: usize,
    pub segmenter: Segmenter,
    /// Sample among distinct sentences instead of sentence occurrences.
    pub dedup: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            cap: CONTEXT_COUNT_MAX,
            count: ContextCount::Uniform,
            seed: 0,
            workers: 1,
            segmenter: Segmenter::RuleBased,
            dedup: false,
        }
    }
}

fn token_seed(token: &str, seed: u64) -> u64 {
    seed::derive(seed, &[seed::fnv1a(token.as_bytes())])
}

fn sample_in(token: &str, seed: u64, upper: usize) -> usize {
    let mut rng = seed::rng(seed::derive(token_seed(token, seed), &[0x63_6f75_6e74]));
    rng.random_range(CONTEXT_COUNT_MIN..=upper.max(CONTEXT_COUNT_MIN))
}

/// Per-token number of context sentences: uniform over `1..=20`,
/// deterministic in `(token, seed)`.
pub fn sample_context_count(token: &str, seed: u64) -> usize {
    sample_in(token, seed, CONTEXT_COUNT_MAX)
}

impl ScanOptions {
    pub fn sample_size(&self, token: &str) -> usize {
        match self.count {
            ContextCount::Uniform => sample_in(token, self.seed, self.cap),
            ContextCount::Fixed => self.cap,
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    sentence: Arc<[TokenId]>,
    spans: Vec<Span>,
    source: HitSource,
}

/// Bottom-k sample by keyed hash: picks the `k` distinct sentences with the
/// smallest keys, which is uniform over distinct sentences and merges exactly.
#[derive(Debug, Clone, Default)]
struct BottomK {
    seen: u64,
    entries: BTreeMap<(u64, Arc<[TokenId]>), Candidate>,
}

impl BottomK {
    fn offer(&mut self, k: usize, key: u64, cand: Candidate) {
        self.seen += 1;
        let map_key = (key, Arc::clone(&cand.sentence));
        if let Some(existing) = self.entries.get_mut(&map_key) {
            // keep the earliest copy of a duplicated sentence
            if cand.source < existing.source {
                *existing = cand;
            }
            return;
        }
        if self.entries.len() < k {
            self.entries.insert(map_key, cand);
        } else if let Some(last) = self.entries.keys().next_back() {
            if map_key < *last {
                let last = last.clone();
                self.entries.remove(&last);
                self.entries.insert(map_key, cand);
            }
        }
    }

    fn merge(mut self, other: BottomK, k: usize) -> BottomK {
        let seen = self.seen + other.seen;
        for ((key, _), cand) in other.entries {
            self.offer(k, key, cand);
        }
        self.seen = seen;
        self
    }
}

enum Sampler {
    Reservoir(Reservoir<Candidate>),
    Distinct(BottomK),
}

struct TargetInfo {
    token: String,
    sample_size: usize,
    seed: u64,
}

fn validate_targets(targets: &[String], vocab: &Vocab) -> Result<Vec<(TokenId, String)>> {
    let unique: BTreeSet<&String> = targets.iter().collect();
    let mut missing = Vec::new();
    let mut out = Vec::new();
    for t in unique {
        match vocab.id(t) {
            Some(id) => out.push((id, t.clone())),
            None => missing.push(t.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::UnknownTargets(missing));
    }
    Ok(out)
}

/// Finds every sentence whose domain tokenization contains one of `targets`
/// and keeps a uniform random sample of them per token.
///
/// Work is split into fixed document chunks; each chunk samples with its own
/// seeded stream and chunk samples are merged in corpus order, so the output
/// depends on `(corpus, targets, vocab, cap, seed)` but not on `workers`.
pub fn scan_for_tokens(
    corpus: &CorpusSource,
    targets: &[String],
    vocab: &Vocab,
    options: &ScanOptions,
) -> Result<ScanResult> {
    if !(CONTEXT_COUNT_MIN..=CONTEXT_COUNT_MAX).contains(&options.cap) {
        return Err(Error::InvalidArgument(format!(
            "cap must be in [{CONTEXT_COUNT_MIN}, {CONTEXT_COUNT_MAX}], got {}",
            options.cap
        )));
    }
    let resolved = validate_targets(targets, vocab)?;
    let infos: Vec<TargetInfo> = resolved
        .iter()
        .map(|(_, t)| TargetInfo {
            token: t.clone(),
            sample_size: options.sample_size(t),
            seed: token_seed(t, options.seed),
        })
        .collect();
    let by_id: HashMap<TokenId, usize> = resolved
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (*id, i))
        .collect();

    let chunk_results = corpus.map_chunks(options.workers, |chunk| {
        let mut samplers: HashMap<usize, (Sampler, rand_chacha::ChaCha8Rng)> = HashMap::new();
        let mut positions: BTreeMap<usize, Vec<Span>> = BTreeMap::new();
        for (i, doc) in chunk.docs.iter().enumerate() {
            let offset = chunk.first_offset + i as u64;
            for (si, sentence) in options.segmenter.segment(doc).into_iter().enumerate() {
                let ids = vocab.encode(sentence);
                positions.clear();
                for (p, id) in ids.iter().enumerate() {
                    if let Some(&t) = by_id.get(id) {
                        positions.entry(t).or_default().push(Span::new(p, p + 1));
                    }
                }
                if positions.is_empty() {
                    continue;
                }
                let shared: Arc<[TokenId]> = Arc::from(ids);
                let source = HitSource {
                    shard: chunk.shard,
                    offset,
                    sentence: si as u32,
                };
                for (&t, spans) in &positions {
                    let info = &infos[t];
                    let (sampler, rng) = samplers.entry(t).or_insert_with(|| {
                        let s = if options.dedup {
                            Sampler::Distinct(BottomK::default())
                        } else {
                            Sampler::Reservoir(Reservoir::new(info.sample_size))
                        };
                        let chunk_seed =
                            seed::derive(info.seed, &[chunk.shard as u64, chunk.index as u64]);
                        (s, seed::rng(chunk_seed))
                    });
                    let make = || Candidate {
                        sentence: Arc::clone(&shared),
                        spans: spans.clone(),
                        source,
                    };
                    match sampler {
                        Sampler::Reservoir(r) => r.offer_with(rng, make),
                        Sampler::Distinct(b) => {
                            let key = sentence_key(info.seed, &shared);
                            b.offer(info.sample_size, key, make());
                        }
                    }
                }
            }
        }
        samplers
            .into_iter()
            .map(|(t, (s, _))| (t, s))
            .collect::<Vec<_>>()
    })?;

    let mut per_target: Vec<Vec<Sampler>> = (0..infos.len()).map(|_| Vec::new()).collect();
    for chunk in chunk_results {
        for (t, s) in chunk {
            per_target[t].push(s);
        }
    }

    let mut tokens = BTreeMap::new();
    for (t, samplers) in per_target.into_iter().enumerate() {
        let info = &infos[t];
        let mut merge_rng = seed::rng(seed::derive(info.seed, &[0x6d_6572_6765]));
        let (qualifying, mut candidates) = if options.dedup {
            let mut acc = BottomK::default();
            for s in samplers {
                if let Sampler::Distinct(b) = s {
                    acc = acc.merge(b, info.sample_size);
                }
            }
            (acc.seen, acc.entries.into_values().collect::<Vec<_>>())
        } else {
            let mut acc = Reservoir::new(info.sample_size);
            for s in samplers {
                if let Sampler::Reservoir(r) = s {
                    acc = acc.merge(r, &mut merge_rng);
                }
            }
            (acc.seen(), acc.into_items())
        };
        candidates.sort_by_key(|c| c.source);
        let hits = candidates
            .into_iter()
            .map(|c| SentenceHit {
                sentence: c.sentence,
                spans: c.spans,
                source: c.source,
            })
            .collect();
        tokens.insert(
            info.token.clone(),
            TokenHits {
                hits,
                qualifying,
                sample_size: info.sample_size,
            },
        );
    }

    Ok(ScanResult {
        shards: corpus.shard_names(),
        tokens,
    })
}

fn sentence_key(seed: u64, ids: &[TokenId]) -> u64 {
    let bytes: Vec<u8> = ids.iter().flat_map(|id| id.to_le_bytes()).collect();
    seed::derive(seed, &[seed::fnv1a(&bytes)])
}

#[derive(Debug, Serialize, Deserialize)]
struct HitRecord {
    token: String,
    sentence_token_ids: Vec<TokenId>,
    span: [usize; 2],
    shard: String,
    shard_index: usize,
    offset: u64,
    sentence: u32,
}

/// Sidecar listing every scanned token, including those without hits.
pub fn targets_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".targets.tsv");
    PathBuf::from(s)
}

/// Writes one JSON line per occurrence plus the `.targets.tsv` sidecar
/// (`token \t qualifying \t sample_size`).
pub fn write_hits(result: &ScanResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (token, th) in &result.tokens {
        for hit in &th.hits {
            for span in &hit.spans {
                let record = HitRecord {
                    token: token.clone(),
                    sentence_token_ids: hit.sentence.to_vec(),
                    span: [span.start, span.end],
                    shard: result
                        .shards
                        .get(hit.source.shard)
                        .cloned()
                        .unwrap_or_default(),
                    shard_index: hit.source.shard,
                    offset: hit.source.offset,
                    sentence: hit.source.sentence,
                };
                let line =
                    serde_json::to_string(&record).map_err(|e| Error::Parse(e.to_string()))?;
                writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
            }
        }
    }
    out.flush().map_err(|e| Error::io(path, e))?;

    let side = targets_sidecar(path);
    let mut text = String::new();
    for (token, th) in &result.tokens {
        text.push_str(&format!("{token}\t{}\t{}\n", th.qualifying, th.sample_size));
    }
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

pub fn read_hits(path: impl AsRef<Path>) -> Result<ScanResult> {
    let path = path.as_ref();
    let mut result = ScanResult::default();
    let side = targets_sidecar(path);
    let side_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    for (n, line) in side_text.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = match fields.as_slice() {
            [t, q, m] => q
                .parse()
                .ok()
                .zip(m.parse().ok())
                .map(|(q, m)| (t.to_string(), q, m)),
            _ => None,
        };
        let (token, qualifying, sample_size) = parsed.ok_or_else(|| {
            Error::Parse(format!("{}:{}: bad targets line", side.display(), n + 1))
        })?;
        result.tokens.insert(
            token,
            TokenHits {
                hits: Vec::new(),
                qualifying,
                sample_size,
            },
        );
    }

    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: HitRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if result.shards.len() <= r.shard_index {
            result.shards.resize(r.shard_index + 1, String::new());
        }
        result.shards[r.shard_index] = r.shard.clone();
        let source = HitSource {
            shard: r.shard_index,
            offset: r.offset,
            sentence: r.sentence,
        };
        let span = Span::new(r.span[0], r.span[1]);
        if span.is_empty() || span.end > r.sentence_token_ids.len() {
            return Err(Error::Parse(format!(
                "{}:{}: span out of range",
                path.display(),
                n + 1
            )));
        }
        let entry = result.tokens.get_mut(&r.token).ok_or_else(|| {
            Error::Parse(format!(
                "{}:{}: token `{}` missing from sidecar",
                path.display(),
                n + 1,
                r.token
            ))
        })?;
        match entry.hits.last_mut() {
            Some(last) if last.source == source => last.spans.push(span),
            _ => entry.hits.push(SentenceHit {
                sentence: Arc::from(r.sentence_token_ids),
                spans: vec![span],
                source,
            }),
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordpiece::SPECIAL_TOKENS;

    fn vocab() -> Vocab {
        let mut tokens: Vec<&str> = SPECIAL_TOKENS.to_vec();
        tokens.extend(["the", "lung", "is", "red", "blue", "cat", "##s", "."]);
        Vocab::from_tokens(tokens).unwrap()
    }

    fn targets(ts: &[&str]) -> Vec<String> {
        ts.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_sentence_always_returned() {
        let corpus = CorpusSource::from_documents(["The cat is red.", "The lung is blue."]);
        let v = vocab();
        for seed in 0..20 {
            let opts = ScanOptions {
                seed,
                ..Default::default()
            };
            let r = scan_for_tokens(&corpus, &targets(&["lung"]), &v, &opts).unwrap();
            let th = r.get("lung").unwrap();
            assert_eq!(th.hits.len(), 1);
            assert_eq!(th.qualifying, 1);
            assert_eq!(v.decode(&th.hits[0].sentence), "the lung is blue .");
            assert_eq!(th.hits[0].spans, vec![Span::new(1, 2)]);
        }
    }

    #[test]
    fn absent_token_yields_empty_list() {
        let corpus = CorpusSource::from_documents(["The cat is red."]);
        let r = scan_for_tokens(
            &corpus,
            &targets(&["lung"]),
            &vocab(),
            &ScanOptions::default(),
        )
        .unwrap();
        let th = r.get("lung").unwrap();
        assert!(th.hits.is_empty());
        assert_eq!(th.qualifying, 0);
    }

    #[test]
    fn unknown_target_is_reported() {
        let corpus = CorpusSource::from_documents(["x"]);
        let err = scan_for_tokens(
            &corpus,
            &targets(&["zebra", "lung", "okapi"]),
            &vocab(),
            &ScanOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::UnknownTargets(t) => assert_eq!(t, ["okapi", "zebra"]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn token_match_is_not_substring_match() {
        // "cats" tokenizes to cat ##s; "##s" is only found as a piece
        let corpus = CorpusSource::from_documents(["The cats is red."]);
        let r = scan_for_tokens(
            &corpus,
            &targets(&["cat", "red"]),
            &vocab(),
            &ScanOptions::default(),
        )
        .unwrap();
        assert_eq!(r.get("cat").unwrap().qualifying, 1);
    }

    #[test]
    fn repeated_occurrences_count_once() {
        let corpus = CorpusSource::from_documents(["The lung is the lung."]);
        let r = scan_for_tokens(
            &corpus,
            &targets(&["lung"]),
            &vocab(),
            &ScanOptions::default(),
        )
        .unwrap();
        let th = r.get("lung").unwrap();
        assert_eq!(th.qualifying, 1);
        assert_eq!(th.hits.len(), 1);
        assert_eq!(th.hits[0].spans, vec![Span::new(1, 2), Span::new(4, 5)]);
        assert_eq!(th.occurrences(), 2);
    }

    #[test]
    fn context_count_bounds_and_determinism() {
        for seed in 0..500 {
            let m = sample_context_count("bronchoconstriction", seed);
            assert!((1..=20).contains(&m));
            assert_eq!(m, sample_context_count("bronchoconstriction", seed));
        }
    }

    #[test]
    fn dedup_collapses_identical_sentences() {
        let docs = vec!["The lung is red."; 30];
        let corpus = CorpusSource::from_documents(docs);
        let opts = ScanOptions {
            dedup: true,
            count: ContextCount::Fixed,
            ..Default::default()
        };
        let r = scan_for_tokens(&corpus, &targets(&["lung"]), &vocab(), &opts).unwrap();
        let th = r.get("lung").unwrap();
        assert_eq!(th.hits.len(), 1);
        assert_eq!(th.hits[0].source.offset, 0);
    }

    #[test]
    fn hits_file_round_trip() {
        let corpus =
            CorpusSource::from_documents(["The lung is the lung. The cat is red.", "Blue lung."]);
        let r = scan_for_tokens(
            &corpus,
            &targets(&["lung", "cat", "blue", "the"]),
            &vocab(),
            &ScanOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hits.jsonl");
        write_hits(&r, &path).unwrap();
        let back = read_hits(&path).unwrap();
        assert_eq!(back.tokens, r.tokens);
        let first = std::fs::read_to_string(&path).unwrap();
        let line: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        for key in ["token", "sentence_token_ids", "span", "shard", "offset"] {
            assert!(line.get(key).is_some(), "{key}");
        }
    }
}
