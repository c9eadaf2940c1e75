//! The whole pipeline through the command line entry point, in a
//! temporary directory: vocabulary, vocabulary diff, scan, matrix build,
//! MLM examples, schedule and frequency analysis.
//!
//! `cargo run --example end_to_end`

use std::path::Path;

use lmprep::cli::main_with;
use lmprep::corpus::CorpusSource;
use lmprep::transfer::SyntheticProvider;
use lmprep::wordpiece::{train_vocab, TrainerConfig, Vocab};

const BASE_TEXT: &str = "\
The patient was seen in the clinic today.
The report was sent to the family doctor.
A follow up visit was planned for next week.
The doctor and the patient talked about the plan.
";

const DOMAIN_TEXT: &str = "\
The patient has bronchitis with bronchoconstriction.
Bronchoconstriction was relieved by a bronchodilator.
Chronic bronchitis and bronchiectasis were seen on imaging.
The bronchodilator eased the wheezing and the bronchitis.
";

fn lmprep(args: &[&str], dir: &Path) {
    let mut argv = vec!["lmprep".to_string()];
    argv.extend(
        args.iter()
            .map(|a| a.replace("{dir}", dir.to_str().unwrap())),
    );
    println!("$ {}", argv.join(" "));
    let code = main_with(argv);
    assert_eq!(code, 0, "command failed");
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = std::env::temp_dir().join("lmprep-end-to-end");
    let _ = std::fs::remove_dir_all(&tmp);
    std::fs::create_dir_all(tmp.join("corpus"))?;
    std::fs::write(tmp.join("corpus/domain.txt"), DOMAIN_TEXT.repeat(20))?;
    std::fs::write(tmp.join("base.txt"), BASE_TEXT)?;

    // the base model: a vocabulary and an embedding table
    let trained = train_vocab(
        &CorpusSource::from_files([tmp.join("base.txt")]),
        &TrainerConfig::new(90),
    )?;
    // like any real base vocabulary it covers every letter, alone and as a continuation
    let mut tokens = trained.tokens().to_vec();
    for c in 'a'..='z' {
        for t in [c.to_string(), format!("##{c}")] {
            if !trained.contains(&t) {
                tokens.push(t);
            }
        }
    }
    let base = Vocab::from_tokens(tokens)?;
    base.save(tmp.join("base_vocab.txt"))?;
    SyntheticProvider::new(16, 1)
        .static_table(base.len())
        .export(tmp.join("base_matrix.bin"))?;

    lmprep(
        &[
            "train-vocab",
            "--corpus",
            "{dir}/corpus",
            "--size",
            "110",
            "--out",
            "{dir}/vocab",
        ],
        &tmp,
    );
    lmprep(
        &[
            "diff",
            "--domain-vocab",
            "{dir}/vocab/vocab.txt",
            "--base-vocab",
            "{dir}/base_vocab.txt",
            "--out",
            "{dir}/diff",
        ],
        &tmp,
    );
    lmprep(
        &[
            "scan",
            "--corpus",
            "{dir}/corpus",
            "--domain-vocab",
            "{dir}/vocab/vocab.txt",
            "--base-vocab",
            "{dir}/base_vocab.txt",
            "--out",
            "{dir}/scan",
        ],
        &tmp,
    );
    lmprep(
        &[
            "build-matrix",
            "--mode",
            "contextualized",
            "--domain-vocab",
            "{dir}/vocab/vocab.txt",
            "--base-vocab",
            "{dir}/base_vocab.txt",
            "--base-matrix",
            "{dir}/base_matrix.bin",
            "--hits",
            "{dir}/scan/hits.jsonl",
            "--out",
            "{dir}/matrix",
        ],
        &tmp,
    );
    lmprep(
        &[
            "collate",
            "--corpus",
            "{dir}/corpus",
            "--vocab",
            "{dir}/vocab/vocab.txt",
            "--phase",
            "0.2",
            "--out",
            "{dir}/mlm",
        ],
        &tmp,
    );
    lmprep(
        &[
            "schedule",
            "--total-steps",
            "200",
            "--out",
            "{dir}/schedule",
        ],
        &tmp,
    );
    lmprep(
        &[
            "freq",
            "--corpus",
            "{dir}/corpus",
            "--reference",
            "{dir}/base.txt",
            "--out",
            "{dir}/freq",
        ],
        &tmp,
    );
    println!("artifacts under {}", tmp.display());
    Ok(())
}
