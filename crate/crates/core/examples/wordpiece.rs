//! Train a small WordPiece vocabulary, then tokenize with it.
//!
//! `cargo run --example wordpiece`

use lmprep::corpus::CorpusSource;
use lmprep::wordpiece::{train_vocab, word_groups, TrainerConfig};

const TEXT: &str = "\
Bronchitis is an inflammation of the bronchi.
Chronic bronchitis often follows smoking.
The bronchioles branch from the bronchi.
Bronchoconstriction narrows the airways during an asthma attack.
Inflammation of the airways causes coughing and wheezing.
Bronchodilators relax the bronchial muscles and relieve bronchoconstriction.
Acute bronchitis usually resolves, chronic bronchitis persists.
Constriction of the bronchioles and inflammation of the bronchi worsen the cough.
The bronchial tree divides into bronchi and then bronchioles.
";

fn main() -> lmprep::Result<()> {
    let corpus = CorpusSource::from_documents(TEXT.lines());
    let vocab = train_vocab(&corpus, &TrainerConfig::new(150))?;
    println!("trained {} tokens (target 150)", vocab.len());

    let sentence = "Bronchoconstriction and bronchitis inflame the bronchioles.";
    let ids = vocab.encode(sentence);
    println!("{sentence}");
    println!("  pieces: {}", vocab.tokenize(sentence).join(" "));
    println!("  ids:    {ids:?}");
    println!("  decode: {}", vocab.decode(&ids));

    // word groups are what whole-word masking selects as units
    let groups = word_groups(&ids, &vocab)?;
    for r in &groups.ranges {
        let pieces: Vec<_> = ids[r.clone()]
            .iter()
            .map(|&i| vocab.token(i).unwrap())
            .collect();
        println!("  word {:?}: {}", r, pieces.join(" "));
    }
    Ok(())
}
