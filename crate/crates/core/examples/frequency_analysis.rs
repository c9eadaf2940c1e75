//! Word-frequency categories of two corpora and the anisotropy of an
//! embedding table.
//!
//! `cargo run --example frequency_analysis`

use lmprep::analysis::{anisotropy, bucket_frequencies, compare_corpora, Boundaries};
use lmprep::corpus::{count_frequencies, CorpusSource};
use lmprep::transfer::SyntheticProvider;

/// Word `w{r}` appears about `n / r` times.
fn zipf_corpus(n: usize, words: usize, offset: usize) -> CorpusSource {
    let mut docs = Vec::new();
    for r in 1..=words {
        let count = (n / r).max(1);
        docs.push(vec![format!("w{}", r + offset); count].join(" "));
    }
    CorpusSource::from_documents(docs)
}

fn main() -> lmprep::Result<()> {
    let general = count_frequencies(&zipf_corpus(20_000, 3000, 0), 2)?;
    let domain = count_frequencies(&zipf_corpus(5_000, 2000, 1500), 2)?;
    let b = Boundaries::default();
    println!("general: {:?}", bucket_frequencies(&general, b).counts);
    let cmp = compare_corpora(&general, &domain, b);
    print!("{}", cmp.to_tsv("general", "domain"));
    println!("shared words: {}", cmp.shared_words);

    let table = SyntheticProvider::new(32, 5).static_table(200);
    let rows: Vec<&[f32]> = table.rows().collect();
    println!(
        "anisotropy, all pairs:  {:+.5}",
        anisotropy(&rows, 200 * 199 / 2, 0)?
    );
    println!(
        "anisotropy, 2000 pairs: {:+.5}",
        anisotropy(&rows, 2000, 1)?
    );
    Ok(())
}
