//! Token and whole-word masking with 80-10-10 and mask-only corruption.
//!
//! `cargo run --example mlm_masking`

use lmprep::masking::{build_example, Corruption, MaskingConfig, MaskingStrategy};
use lmprep::wordpiece::{Vocab, SPECIAL_TOKENS};

fn main() -> lmprep::Result<()> {
    let mut t: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    t.extend(
        [
            "the", "bro", "##nch", "##itis", "was", "in", "##flam", "##ed", "and", "sore", ".",
        ]
        .map(String::from),
    );
    let vocab = Vocab::from_tokens(t)?;
    let ids = vocab.encode("the bronchitis was inflamed and sore .");
    let mut ids_with_specials = vec![vocab.specials().cls];
    ids_with_specials.extend(ids);
    ids_with_specials.push(vocab.specials().sep);
    println!("input:  {}", render(&vocab, &ids_with_specials));

    for config in [
        MaskingConfig::new(MaskingStrategy::Token, 0.3, Corruption::EightyTenTen),
        MaskingConfig::new(MaskingStrategy::WholeWord, 0.3, Corruption::EightyTenTen),
        MaskingConfig::new(MaskingStrategy::WholeWord, 0.3, Corruption::MaskOnly),
    ] {
        let ex = build_example(&ids_with_specials, &vocab, &config, 11)?;
        println!("{config}");
        println!("  corrupted: {}", render(&vocab, &ex.corrupted));
        let labels: Vec<String> = ex
            .label_pairs()
            .map(|(p, id)| format!("{p}={}", vocab.token(id).unwrap()))
            .collect();
        println!(
            "  labels:    {}  actions {:?}",
            labels.join(" "),
            ex.actions
        );
    }
    Ok(())
}

fn render(vocab: &Vocab, ids: &[u32]) -> String {
    ids.iter()
        .map(|&i| vocab.token(i).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}
