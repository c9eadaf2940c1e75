//! Count words over several shards and sample the sentences a token
//! occurs in, with the same result for any worker count.
//!
//! `cargo run --example corpus_scan`

use lmprep::corpus::{count_frequencies, scan_for_tokens, CorpusSource, ScanOptions};
use lmprep::wordpiece::{Vocab, SPECIAL_TOKENS};

fn main() -> lmprep::Result<()> {
    let organs = ["lung", "liver", "kidney", "heart"];
    let shards: Vec<(String, String)> = (0..3)
        .map(|s| {
            let docs: Vec<String> = (0..400)
                .map(|i| {
                    let organ = organs[(i * 7 + s) % organs.len()];
                    format!("Case {i} showed a lesion in the {organ}. The {organ} was biopsied.")
                })
                .collect();
            (format!("shard-{s}"), docs.join("\n"))
        })
        .collect();
    let corpus = CorpusSource::from_texts(shards);

    let freq = count_frequencies(&corpus, 4)?;
    println!(
        "{} tokens, {} distinct words",
        freq.total(),
        freq.distinct()
    );
    for w in organs {
        println!("  {w:>7} {}", freq.get(w));
    }

    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(freq.iter().map(|(w, _)| w.to_string()));
    // in the vocabulary but never in the corpus
    tokens.push("spleen".to_string());
    tokens.push(".".to_string());
    let vocab = Vocab::from_tokens(tokens)?;

    let targets = vec!["kidney".to_string(), "spleen".to_string()];
    let one = scan_for_tokens(
        &corpus,
        &targets,
        &vocab,
        &ScanOptions {
            seed: 7,
            ..Default::default()
        },
    )?;
    let four = scan_for_tokens(
        &corpus,
        &targets,
        &vocab,
        &ScanOptions {
            seed: 7,
            workers: 4,
            ..Default::default()
        },
    )?;
    assert_eq!(one, four);
    for (token, th) in &one.tokens {
        println!(
            "{token}: {} qualifying sentences, sampled {}",
            th.qualifying,
            th.hits.len()
        );
        for hit in th.hits.iter().take(3) {
            println!(
                "  {}:{}  {}",
                one.shards[hit.source.shard],
                hit.source.offset,
                vocab.decode(&hit.sentence)
            );
        }
    }
    Ok(())
}
