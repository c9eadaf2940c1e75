//! Contextualized builds with an external encoder: write the requests,
//! answer them (here with a synthetic encoder), and read the vectors back.
//!
//! `cargo run --example provider_exchange`

use lmprep::corpus::{scan_for_tokens, CorpusSource, ScanOptions};
use lmprep::transfer::exchange::{
    answer_requests, plan_requests, read_context_vectors, write_requests, StoredProvider,
};
use lmprep::transfer::{
    build_embedding_matrix, diff_vocab, BuildOptions, EmbeddingProvider, InitMode, StaticProvider,
    SyntheticProvider, TransferInputs,
};
use lmprep::wordpiece::{Vocab, SPECIAL_TOKENS};

fn vocab(words: &[&str]) -> lmprep::Result<Vocab> {
    let mut t: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    t.extend(words.iter().map(|s| s.to_string()));
    Vocab::from_tokens(t)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = vocab(&["the", "was", "mild", "ed", "##ema", "ana", "##emia", "."])?;
    let domain = vocab(&["the", "was", "mild", "edema", "anaemia", "."])?;
    let mapping = diff_vocab(&domain, &base)?;
    let corpus = CorpusSource::from_documents([
        "The edema was mild.",
        "The anaemia was mild.",
        "Mild edema.",
    ]);
    let targets = ["edema", "anaemia"].map(String::from).to_vec();
    let hits = scan_for_tokens(&corpus, &targets, &domain, &ScanOptions::default())?;

    let dir = std::env::temp_dir().join("lmprep-exchange");
    std::fs::create_dir_all(&dir)?;
    let requests = plan_requests(&domain, &base, &mapping, &hits)?;
    write_requests(&requests, dir.join("requests.jsonl"))?;
    println!("{} requests written to {}", requests.len(), dir.display());

    // the external side: any encoder that can embed base-vocabulary sentences
    let encoder = SyntheticProvider::new(8, 2);
    answer_requests(&requests, &encoder, dir.join("context_vectors.bin"))?;

    let statics = StaticProvider::new(encoder.static_table(base.len()));
    let store = read_context_vectors(dir.join("context_vectors.bin"), &requests, statics.dim())?;
    let stored = StoredProvider::new(statics, store)?;
    let options = BuildOptions::default();
    let build = |p: &dyn EmbeddingProvider| {
        let inputs = TransferInputs {
            domain: &domain,
            base: &base,
            mapping: &mapping,
            provider: p,
        };
        build_embedding_matrix(InitMode::Contextualized, &inputs, Some(&hits), 0, &options)
            .map(|(m, _)| m)
    };
    let from_files = build(&stored)?;
    let in_process = build(&encoder)?;
    println!(
        "matrix from exchange files equals in-process build: {}",
        from_files == in_process
    );
    Ok(())
}
