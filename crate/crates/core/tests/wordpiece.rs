mod common;

use common::{fixture, read_json, vocab};
use lmprep::corpus::CorpusSource;
use lmprep::wordpiece::{train_vocab, word_groups, TrainerConfig, Vocab};
use proptest::prelude::*;

fn trainer_corpus() -> CorpusSource {
    CorpusSource::from_files([fixture("trainer_corpus.txt")])
}

#[test]
fn trainer_matches_reference_scorer() {
    let expected = read_json("trainer_expected.json");
    let target = expected["target"].as_u64().unwrap() as usize;
    let vocab = train_vocab(&trainer_corpus(), &TrainerConfig::new(target)).unwrap();
    let tokens: Vec<String> = serde_json::from_value(expected["tokens"].clone()).unwrap();
    assert_eq!(vocab.tokens(), tokens.as_slice());
}

#[test]
fn trained_vocab_tokenizes_like_reference() {
    let expected = read_json("trainer_expected.json");
    let vocab = train_vocab(&trainer_corpus(), &TrainerConfig::new(120)).unwrap();
    let text = std::fs::read_to_string(fixture("trainer_corpus.txt")).unwrap();
    let tokenized: Vec<Vec<String>> =
        serde_json::from_value(expected["tokenized"].clone()).unwrap();
    for (line, want) in text.lines().zip(&tokenized) {
        assert_eq!(vocab.tokenize(line), *want, "{line}");
    }
}

#[test]
fn training_ignores_worker_count() {
    let one = train_vocab(&trainer_corpus(), &TrainerConfig::new(120)).unwrap();
    let mut config = TrainerConfig::new(120);
    config.workers = 4;
    assert_eq!(
        one.tokens(),
        train_vocab(&trainer_corpus(), &config).unwrap().tokens()
    );
}

#[test]
fn vocab_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let v = train_vocab(&trainer_corpus(), &TrainerConfig::new(90)).unwrap();
    let path = dir.path().join("vocab.txt");
    v.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), v.len());
    assert_eq!(text.lines().next(), Some("[PAD]"));
    let back = Vocab::load(&path, Default::default()).unwrap();
    assert_eq!(back.tokens(), v.tokens());
}

#[test]
fn six_piece_example() {
    let v = vocab(&["bro", "##nch", "##oco", "##nst", "##ric", "##tion"]);
    assert_eq!(
        v.tokenize("bronchoconstriction"),
        ["bro", "##nch", "##oco", "##nst", "##ric", "##tion"]
    );
    let ids = v.encode("bronchoconstriction");
    assert_eq!(word_groups(&ids, &v).unwrap().ranges, vec![0..6]);
}

#[test]
fn greedy_head_without_continuation_is_unk() {
    // "bron" wins the first match and leaves "##cho..." unmatchable
    let v = vocab(&["bro", "bron", "##nch", "##oco", "##nst", "##ric", "##tion"]);
    assert_eq!(v.tokenize("bronchoconstriction"), ["[UNK]"]);
}

#[test]
fn hand_labelled_word_groups() {
    let text = std::fs::read_to_string(fixture("word_groups.txt")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let tokens: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    let ranges: Vec<std::ops::Range<usize>> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|r| {
            let (a, b) = r.split_once(':').unwrap();
            a.parse().unwrap()..b.parse().unwrap()
        })
        .collect();
    assert_eq!(tokens.len(), 10);
    let v = vocab(&[
        "the", "bro", "##nch", "##itis", "was", "in", "##flam", "##ed",
    ]);
    let ids: Vec<_> = tokens.iter().map(|t| v.id(t).unwrap()).collect();
    assert_eq!(word_groups(&ids, &v).unwrap().ranges, ranges);
}

#[test]
fn unencodable_word_is_unk() {
    let v = vocab(&["a", "b"]);
    assert_eq!(v.tokenize("∆∆∆"), ["[UNK]"]);
    assert_eq!(v.tokenize(&"a".repeat(101)), ["[UNK]"]);
}

fn toy() -> Vocab {
    let mut t = vec!["the", "lung", "cell", "tum", "bro"];
    let letters: Vec<String> = ('a'..='z')
        .flat_map(|c| [c.to_string(), format!("##{c}")])
        .collect();
    let pieces = ["##or", "##nch", "##itis", "##s", "##ing"];
    t.extend(pieces);
    let mut all: Vec<&str> = t;
    all.extend(letters.iter().map(String::as_str));
    let mut seen = std::collections::HashSet::new();
    all.retain(|s| seen.insert(*s));
    vocab(&all)
}

proptest! {
    #[test]
    fn decode_inverts_encode(words in prop::collection::vec("[a-z]{1,12}", 1..8)) {
        let v = toy();
        let text = words.join(" ");
        let ids = v.encode(&text);
        prop_assert!(!ids.contains(&v.specials().unk));
        prop_assert_eq!(v.decode(&ids), text.clone());
        prop_assert_eq!(v.encode(&text), ids);
    }

    #[test]
    fn groups_partition_non_special_positions(words in prop::collection::vec("[a-z]{1,12}", 0..8)) {
        let v = toy();
        let s = v.specials();
        let mut ids = vec![s.cls];
        ids.extend(v.encode(&words.join(" ")));
        ids.push(s.sep);
        let groups = word_groups(&ids, &v).unwrap();
        let mut covered = vec![false; ids.len()];
        let mut last_end = 0;
        for r in &groups.ranges {
            prop_assert!(r.start >= last_end && r.start < r.end);
            last_end = r.end;
            prop_assert!(!v.is_continuation(ids[r.start]));
            for p in r.clone() {
                covered[p] = true;
                if p > r.start {
                    prop_assert!(v.is_continuation(ids[p]));
                }
            }
        }
        for (p, &id) in ids.iter().enumerate() {
            prop_assert_eq!(covered[p], !v.is_special(id));
        }
        prop_assert_eq!(groups.len(), words.len());
    }
}
