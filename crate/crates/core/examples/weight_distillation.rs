//! Build the embedding matrix of a domain vocabulary from a base model:
//! shared rows are copied, new rows are distilled from base subtokens and
//! then averaged with their in-context representations.
//!
//! `cargo run --example weight_distillation`

use lmprep::corpus::{scan_for_tokens, CorpusSource, ScanOptions};
use lmprep::transfer::{
    build_embedding_matrix, diff_vocab, BuildOptions, Distiller, InitMode, Provenance,
    SyntheticProvider, TransferInputs,
};
use lmprep::wordpiece::{Vocab, SPECIAL_TOKENS};

fn vocab(words: &[&str]) -> lmprep::Result<Vocab> {
    let mut t: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    t.extend(words.iter().map(|s| s.to_string()));
    Vocab::from_tokens(t)
}

fn main() -> lmprep::Result<()> {
    let base = vocab(&[
        "the", "of", "was", "severe", "bro", "##nch", "##oco", "##nst", "##ric", "##tion",
        "##itis", "cy", "##to", "##kine", ".",
    ])?;
    let domain = vocab(&[
        "the",
        "of",
        "was",
        "severe",
        "bronchoconstriction",
        "bronchitis",
        "cytokine",
        ".",
    ])?;
    let mapping = diff_vocab(&domain, &base)?;
    println!(
        "{} shared, {} new tokens",
        mapping.shared.len(),
        mapping.new.len()
    );

    // stands in for the base model's embedding table and last layer
    let provider = SyntheticProvider::new(8, 1);
    let d = Distiller::new(&domain, &base, &provider);
    let pieces: Vec<_> = d
        .base_pieces("bronchoconstriction")?
        .iter()
        .map(|&i| base.token(i).unwrap())
        .collect();
    println!("bronchoconstriction -> {}", pieces.join(" "));

    let corpus = CorpusSource::from_documents([
        "The bronchoconstriction was severe.",
        "Severe bronchitis of the bronchi.",
        "The cytokine was severe.",
    ]);
    let targets: Vec<String> = mapping
        .new
        .iter()
        .map(|&i| domain.token(i).unwrap().to_string())
        .collect();
    let hits = scan_for_tokens(&corpus, &targets, &domain, &ScanOptions::default())?;

    let inputs = TransferInputs {
        domain: &domain,
        base: &base,
        mapping: &mapping,
        provider: &provider,
    };
    for mode in [InitMode::Averaged, InitMode::Contextualized] {
        let (m, _) =
            build_embedding_matrix(mode, &inputs, Some(&hits), 0, &BuildOptions::default())?;
        let id = domain.id("bronchoconstriction").unwrap() as usize;
        let row: Vec<String> = m
            .row(id)
            .unwrap()
            .iter()
            .take(4)
            .map(|x| format!("{x:+.3}"))
            .collect();
        println!(
            "{mode:>14}: copied {} distilled {} contextualized {}; bronchoconstriction [{} ...]",
            m.count(Provenance::Copied),
            m.count(Provenance::Distilled),
            m.count(Provenance::Contextualized),
            row.join(" ")
        );
    }
    Ok(())
}
