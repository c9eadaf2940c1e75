use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use super::normalize::{pre_tokenize, TokenizerOptions};
use super::vocab::{Vocab, CONTINUATION_PREFIX, SPECIAL_TOKENS};
use crate::corpus::CorpusSource;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrainerConfig {
    pub target_size: usize,
    pub options: TokenizerOptions,
    pub workers: usize,
}

impl TrainerConfig {
    pub fn new(target_size: usize) -> Self {
        Self {
            target_size,
            options: TokenizerOptions::default(),
            workers: 1,
        }
    }
}

/// Exact word counts over the corpus, sorted by word.
fn count_words(corpus: &CorpusSource, config: &TrainerConfig) -> Result<Vec<(String, u64)>> {
    let partials = corpus.map_chunks(config.workers, |chunk| {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in chunk.docs {
            for word in pre_tokenize(doc, &config.options) {
                if word.chars().count() <= config.options.max_word_chars {
                    *counts.entry(word).or_default() += 1;
                }
            }
        }
        counts
    })?;
    let mut total: HashMap<String, u64> = HashMap::new();
    for part in partials {
        for (w, c) in part {
            *total.entry(w).or_default() += c;
        }
    }
    let mut words: Vec<_> = total.into_iter().collect();
    words.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(words)
}

struct Symbols {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Symbols {
    fn intern(&mut self, s: String) -> usize {
        if let Some(&id) = self.index.get(&s) {
            return id;
        }
        let id = self.names.len();
        self.index.insert(s.clone(), id);
        self.names.push(s);
        id
    }
}

/// Trains a WordPiece vocabulary with the likelihood-ratio merge criterion.
///
/// The vocabulary starts as the five specials followed by the sorted
/// character alphabet (word-initial characters bare, word-internal ones with
/// `##`). Each round merges the adjacent pair maximizing
/// `count(pair) / (count(left) * count(right))` among pairs seen at least
/// twice; equal scores go to the lexicographically smallest `(left, right)`.
pub fn train_vocab(corpus: &CorpusSource, config: &TrainerConfig) -> Result<Vocab> {
    let word_counts = count_words(corpus, config)?;
    if word_counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut symbols = Symbols {
        names: Vec::new(),
        index: HashMap::new(),
    };
    let mut alphabet = BTreeSet::new();
    let mut words: Vec<(Vec<usize>, u64)> = Vec::with_capacity(word_counts.len());
    for (word, count) in &word_counts {
        let mut seq = Vec::new();
        for (i, c) in word.chars().enumerate() {
            let s = if i == 0 {
                c.to_string()
            } else {
                format!("{CONTINUATION_PREFIX}{c}")
            };
            alphabet.insert(s.clone());
            seq.push(symbols.intern(s));
        }
        words.push((seq, *count));
    }

    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(
        alphabet
            .iter()
            .filter(|a| !tokens.contains(a))
            .cloned()
            .collect::<Vec<_>>(),
    );
    if config.target_size <= tokens.len() {
        return Err(Error::InvalidArgument(format!(
            "target size {} must exceed specials plus alphabet ({})",
            config.target_size,
            tokens.len()
        )));
    }
    let mut in_vocab: BTreeSet<String> = tokens.iter().cloned().collect();

    while tokens.len() < config.target_size {
        let mut symbol_counts = vec![0u64; symbols.names.len()];
        let mut pair_counts: HashMap<(usize, usize), u64> = HashMap::new();
        for (seq, count) in &words {
            for &s in seq {
                symbol_counts[s] += count;
            }
            for pair in seq.windows(2) {
                *pair_counts.entry((pair[0], pair[1])).or_default() += count;
            }
        }

        let mut best: Option<((usize, usize), u64, u128)> = None;
        for (&pair, &count) in &pair_counts {
            if count < 2 {
                continue;
            }
            let denom = symbol_counts[pair.0] as u128 * symbol_counts[pair.1] as u128;
            let better = match &best {
                None => true,
                Some((bp, bc, bd)) => {
                    // count / denom vs bc / bd, compared exactly
                    match (count as u128 * bd).cmp(&(*bc as u128 * denom)) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => {
                            let names = &symbols.names;
                            (&names[pair.0], &names[pair.1]) < (&names[bp.0], &names[bp.1])
                        }
                    }
                }
            };
            if better {
                best = Some((pair, count, denom));
            }
        }
        let Some(((left, right), _, _)) = best else {
            break;
        };

        let right_name = &symbols.names[right];
        let merged = format!(
            "{}{}",
            symbols.names[left],
            right_name
                .strip_prefix(CONTINUATION_PREFIX)
                .unwrap_or(right_name)
        );
        if in_vocab.insert(merged.clone()) {
            tokens.push(merged.clone());
        }
        let merged_id = symbols.intern(merged);
        for (seq, _) in &mut words {
            if seq.len() < 2 {
                continue;
            }
            let mut out = Vec::with_capacity(seq.len());
            let mut i = 0;
            while i < seq.len() {
                if i + 1 < seq.len() && seq[i] == left && seq[i + 1] == right {
                    out.push(merged_id);
                    i += 2;
                } else {
                    out.push(seq[i]);
                    i += 1;
                }
            }
            *seq = out;
        }
    }

    Vocab::with_options(tokens, config.options.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_word_becomes_a_token() {
        let corpus = CorpusSource::from_documents(std::iter::repeat_n("lung", 10));
        let vocab = train_vocab(&corpus, &TrainerConfig::new(40)).unwrap();
        assert!(vocab.contains("lung"));
        assert!(vocab.len() <= 40);
        assert_eq!(vocab.tokenize("lung"), ["lung"]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus = CorpusSource::from_documents(Vec::<&str>::new());
        assert!(matches!(
            train_vocab(&corpus, &TrainerConfig::new(40)),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn target_must_exceed_seed_inventory() {
        let corpus = CorpusSource::from_documents(["abc"]);
        assert!(matches!(
            train_vocab(&corpus, &TrainerConfig::new(8)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn every_character_is_covered() {
        let corpus = CorpusSource::from_documents(["the quick brown fox", "jumps over"]);
        let vocab = train_vocab(&corpus, &TrainerConfig::new(60)).unwrap();
        for word in ["the", "quick", "brown", "fox", "jumps", "over"] {
            assert!(
                !vocab.encode(word).contains(&vocab.specials().unk),
                "{word}"
            );
        }
    }
}
