use crate::corpus::{CorpusSource, Segmenter};
use crate::error::Result;
use crate::wordpiece::{TokenId, Vocab};

pub const DEFAULT_MAX_LEN: usize = 128;

/// Cuts a corpus into training sequences of at most `max_len` ids.
///
/// Sentences of one document are concatenated while they fit in
/// `max_len - 2` ids; the result is wrapped in `[CLS]`/`[SEP]`. A sentence
/// that does not fit in an empty sequence is split between words, and a
/// single word longer than the budget keeps only its first pieces.
/// Sequences never span two documents.
pub fn pack_sequences(
    corpus: &CorpusSource,
    vocab: &Vocab,
    max_len: usize,
    segmenter: Segmenter,
    workers: usize,
) -> Result<Vec<Vec<TokenId>>> {
    assert!(max_len >= 2, "max_len must leave room for [CLS] and [SEP]");
    let chunks = corpus.map_chunks(workers, |chunk| {
        let mut out = Vec::new();
        for doc in chunk.docs {
            pack_document(doc, vocab, max_len, segmenter, &mut out);
        }
        out
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

fn pack_document(
    doc: &str,
    vocab: &Vocab,
    max_len: usize,
    segmenter: Segmenter,
    out: &mut Vec<Vec<TokenId>>,
) {
    let budget = max_len - 2;
    let s = vocab.specials();
    let mut current: Vec<TokenId> = Vec::with_capacity(budget);
    let mut flush = |current: &mut Vec<TokenId>| {
        if !current.is_empty() {
            let mut seq = Vec::with_capacity(current.len() + 2);
            seq.push(s.cls);
            seq.append(current);
            seq.push(s.sep);
            out.push(seq);
        }
    };
    for sentence in segmenter.segment(doc) {
        let words = vocab.encode_words(sentence);
        let len: usize = words.iter().map(Vec::len).sum();
        if len == 0 {
            continue;
        }
        if current.len() + len > budget {
            flush(&mut current);
        }
        for word in words {
            let word = &word[..word.len().min(budget)];
            if current.len() + word.len() > budget {
                flush(&mut current);
            }
            current.extend_from_slice(word);
        }
    }
    flush(&mut current);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordpiece::SPECIAL_TOKENS;

    fn vocab() -> Vocab {
        let mut t: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        t.extend(["the", "lung", "is", "red", "cell", "."].map(String::from));
        t.extend(["bronch", "##itis"].map(String::from));
        Vocab::from_tokens(t).unwrap()
    }

    #[test]
    fn single_short_sentence() {
        let v = vocab();
        let c = CorpusSource::from_documents(["the lung is red ."]);
        let seqs = pack_sequences(&c, &v, 128, Segmenter::RuleBased, 1).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].len(), 7);
        assert_eq!(seqs[0][0], v.specials().cls);
        assert_eq!(*seqs[0].last().unwrap(), v.specials().sep);
    }

    #[test]
    fn long_document_is_split() {
        let v = vocab();
        let doc = "the lung is red . ".repeat(60); // 300 ids
        let c = CorpusSource::from_documents([doc.as_str()]);
        let seqs = pack_sequences(&c, &v, 128, Segmenter::RuleBased, 1).unwrap();
        assert!(seqs.len() >= 3);
        assert!(seqs.iter().all(|s| s.len() <= 128));
        let inner: usize = seqs.iter().map(|s| s.len() - 2).sum();
        assert_eq!(inner, 300);
    }

    #[test]
    fn documents_are_not_joined() {
        let v = vocab();
        let c = CorpusSource::from_documents(["the lung", "the cell"]);
        let seqs = pack_sequences(&c, &v, 128, Segmenter::RuleBased, 1).unwrap();
        assert_eq!(seqs.len(), 2);
    }

    #[test]
    fn words_stay_whole_at_cuts() {
        let v = vocab();
        let c = CorpusSource::from_documents(["the bronchitis bronchitis"]);
        let seqs = pack_sequences(&c, &v, 5, Segmenter::Document, 1).unwrap();
        let inner: Vec<Vec<&str>> = seqs
            .iter()
            .map(|s| {
                s[1..s.len() - 1]
                    .iter()
                    .map(|&i| v.token(i).unwrap())
                    .collect()
            })
            .collect();
        assert_eq!(
            inner,
            vec![vec!["the", "bronch", "##itis"], vec!["bronch", "##itis"]]
        );
    }
}
