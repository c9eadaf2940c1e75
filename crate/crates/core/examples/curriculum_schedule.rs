//! The four-phase masking curriculum: its schedule manifest and the
//! pseudo-perplexity ranking of the phases on a toy corpus.
//!
//! `cargo run --example curriculum_schedule`

use lmprep::curriculum::{
    default_phases, difficulty_rank, emit_schedule, phase_configs, split_budget,
    BackoffBigramPredictor, LrPlan, DEFAULT_BUDGET_RATIO,
};
use lmprep::wordpiece::{Vocab, SPECIAL_TOKENS};

fn main() -> lmprep::Result<()> {
    let steps = split_budget(1000, &DEFAULT_BUDGET_RATIO)?;
    let phases = default_phases(steps, 1e-4);
    let plan = LrPlan {
        peak_lr: 1e-4,
        warmup_fraction: 0.06,
    };
    let path = std::env::temp_dir().join("lmprep-schedule.csv");
    let rows = emit_schedule(&phases, &plan, &path)?;
    for p in &phases {
        println!("phase {} {:>4} steps  {}", p.version, p.steps, p.masking);
    }
    for step in [0, 30, 60, 500, 999] {
        println!(
            "  step {step:>3}: lr {:.3e} ({})",
            rows[step].lr, rows[step].phase
        );
    }
    println!("schedule written to {}", path.display());

    // a toy corpus of short repetitive clauses, some words in several pieces
    let mut t: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    t.extend(
        [
            "the", "lung", "liver", "is", "was", "red", "bro", "##nch", "##itis", "in", "##flam",
            "##ed", ".",
        ]
        .map(String::from),
    );
    let vocab = Vocab::from_tokens(t)?;
    let lines = [
        "the lung is red .",
        "the liver was inflamed .",
        "bronchitis is red .",
        "the lung was inflamed .",
    ];
    let seqs: Vec<Vec<u32>> = (0..400)
        .map(|i| {
            let mut s = vec![vocab.specials().cls];
            for k in 0..4 {
                s.extend(vocab.encode(lines[(i + k * (i % 3 + 1)) % lines.len()]));
            }
            s.push(vocab.specials().sep);
            s
        })
        .collect();
    let (train, eval) = seqs.split_at(360);
    let predictor = BackoffBigramPredictor::train(train, vocab.len(), vocab.specials().mask)?;
    for e in difficulty_rank(&predictor, eval, &vocab, &phase_configs(), 3, 200)? {
        println!(
            "rank {} phase {} pseudo-perplexity {:.3}",
            e.rank, e.label, e.perplexity
        );
    }
    Ok(())
}
