use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::masking::{build_example, MaskingConfig, MlmExample};
use crate::numeric::KahanSum;
use crate::seed;
use crate::wordpiece::{TokenId, Vocab};

use super::predictor::MaskedPredictor;

/// Mean negative log-likelihood (natural log) of the labels at the selected
/// positions, each predicted from the corrupted sequence.
pub fn mlm_loss<P: MaskedPredictor + ?Sized>(predictor: &P, example: &MlmExample) -> Result<f64> {
    if example.selected.is_empty() {
        return Err(Error::NoSelectedPositions);
    }
    let mut sum = KahanSum::default();
    for (position, token) in example.label_pairs() {
        let p = predictor.prob(&example.corrupted, position, token);
        if p.is_nan() || p <= 0.0 {
            return Err(Error::ZeroProbability { position, token });
        }
        sum.add(-p.ln());
    }
    Ok(sum.value() / example.selected.len() as f64)
}

/// Seed of the `index`-th evaluation example.
pub fn example_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, &[index as u64])
}

/// The examples `pseudo_perplexity` evaluates: example `i` masks
/// `sample[i % len]` with seed `example_seed(seed, i)`. Sequences with no
/// eligible position are skipped and do not count towards `n_examples`.
pub fn evaluation_examples(
    sample: &[Vec<TokenId>],
    vocab: &Vocab,
    config: &MaskingConfig,
    seed: u64,
    n_examples: usize,
) -> Result<Vec<MlmExample>> {
    if n_examples == 0 {
        return Err(Error::InvalidArgument(
            "n_examples must be at least 1".into(),
        ));
    }
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation sample".into()));
    }
    let mut out = Vec::with_capacity(n_examples);
    let mut i = 0usize;
    let limit = n_examples.saturating_mul(sample.len()).max(n_examples);
    while out.len() < n_examples && i < limit {
        let ex = build_example(
            &sample[i % sample.len()],
            vocab,
            config,
            example_seed(seed, i),
        )?;
        if !ex.selected.is_empty() {
            out.push(ex);
        }
        i += 1;
    }
    if out.is_empty() {
        return Err(Error::NoSelectedPositions);
    }
    Ok(out)
}

/// `exp` of the mean per-example MLM loss. Losses are computed in parallel
/// when the predictor allows it and summed in example order, so the value
/// depends only on the inputs and the seed.
pub fn pseudo_perplexity<P: MaskedPredictor + ?Sized>(
    predictor: &P,
    sample: &[Vec<TokenId>],
    vocab: &Vocab,
    config: &MaskingConfig,
    seed: u64,
    n_examples: usize,
) -> Result<f64> {
    let examples = evaluation_examples(sample, vocab, config, seed, n_examples)?;
    perplexity_of(predictor, &examples)
}

/// `exp` of the mean loss over already built examples.
pub fn perplexity_of<P: MaskedPredictor + ?Sized>(
    predictor: &P,
    examples: &[MlmExample],
) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::NoSelectedPositions);
    }
    let losses: Vec<f64> = if predictor.is_reentrant() {
        examples
            .par_iter()
            .map(|e| mlm_loss(predictor, e))
            .collect::<Result<_>>()?
    } else {
        examples
            .iter()
            .map(|e| mlm_loss(predictor, e))
            .collect::<Result<_>>()?
    };
    let mean = losses.into_iter().collect::<KahanSum>().value() / examples.len() as f64;
    Ok(mean.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyEntry {
    pub label: String,
    pub config: MaskingConfig,
    pub perplexity: f64,
    /// 1-based; entries whose perplexities tie share the lower rank.
    pub rank: usize,
}

/// Relative tolerance under which two perplexities count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Evaluates every config on the same examples seeds and sorts them from
/// easiest (lowest perplexity) to hardest.
pub fn difficulty_rank<P: MaskedPredictor + ?Sized>(
    predictor: &P,
    sample: &[Vec<TokenId>],
    vocab: &Vocab,
    configs: &[(String, MaskingConfig)],
    seed: u64,
    n_examples: usize,
) -> Result<Vec<DifficultyEntry>> {
    if configs.len() < 2 {
        return Err(Error::InvalidArgument(
            "difficulty ranking needs at least two configs".into(),
        ));
    }
    let mut entries = configs
        .iter()
        .map(|(label, config)| {
            pseudo_perplexity(predictor, sample, vocab, config, seed, n_examples).map(
                |perplexity| DifficultyEntry {
                    label: label.clone(),
                    config: *config,
                    perplexity,
                    rank: 0,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.perplexity.total_cmp(&b.perplexity));
    for i in 0..entries.len() {
        entries[i].rank = if i > 0 && ties(entries[i - 1].perplexity, entries[i].perplexity) {
            entries[i - 1].rank
        } else {
            i + 1
        };
    }
    Ok(entries)
}

/// TSV `rank  label  strategy  rate  corruption  perplexity`, one row per config.
pub fn write_difficulty_tsv(entries: &[DifficultyEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("rank\tlabel\tstrategy\trate\tcorruption\tperplexity\n");
    for e in entries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.rank, e.label, e.config.strategy, e.config.rate, e.config.corruption, e.perplexity
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
