//! MLM example construction along three axes: which positions are selected
//! (single tokens or whole words), how many (the masking rate) and what the
//! selected positions are replaced with (80-10-10 or `[MASK]` only).

mod io;

pub use io::{
    read_examples_binary, read_examples_jsonl, read_sequences, write_examples_binary,
    write_examples_jsonl, write_sequences,
};

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::wordpiece::{word_groups, TokenId, Vocab, WordGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskingStrategy {
    #[serde(rename = "token")]
    Token,
    #[serde(rename = "whole_word")]
    WholeWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corruption {
    /// 80% `[MASK]`, 10% random token, 10% unchanged.
    #[serde(rename = "80-10-10")]
    EightyTenTen,
    #[serde(rename = "mask_only")]
    MaskOnly,
}

macro_rules! string_enum {
    ($ty:ty { $($variant:path => $s:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $($variant => $s),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        "unknown {} `{other}`", stringify!($ty)
                    ))),
                }
            }
        }
    };
}

string_enum!(MaskingStrategy {
    MaskingStrategy::Token => "token",
    MaskingStrategy::WholeWord => "whole_word",
});
string_enum!(Corruption {
    Corruption::EightyTenTen => "80-10-10",
    Corruption::MaskOnly => "mask_only",
});

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    #[serde(rename = "masking_strategy")]
    pub strategy: MaskingStrategy,
    #[serde(rename = "masking_rate")]
    pub rate: f64,
    #[serde(rename = "corruption_strategy")]
    pub corruption: Corruption,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        Self::new(MaskingStrategy::Token, 0.15, Corruption::EightyTenTen)
    }
}

impl MaskingConfig {
    pub const fn new(strategy: MaskingStrategy, rate: f64, corruption: Corruption) -> Self {
        Self {
            strategy,
            rate,
            corruption,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::InvalidArgument(format!(
                "masking rate {} outside [0, 1]",
                self.rate
            )));
        }
        Ok(())
    }

    /// `round(rate * eligible)`, at least one when both are positive.
    pub fn target_count(&self, eligible: usize) -> usize {
        if self.rate <= 0.0 || eligible == 0 {
            return 0;
        }
        ((self.rate * eligible as f64).round() as usize).clamp(1, eligible)
    }
}

impl fmt::Display for MaskingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.strategy, self.rate, self.corruption)
    }
}

/// Positions chosen for prediction, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Selection {
    pub positions: Vec<usize>,
    /// Set when the rate asked for positions but none were eligible.
    pub no_eligible: bool,
}

/// What happened to a selected position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum CorruptionAction {
    Mask = 0,
    Random = 1,
    Keep = 2,
}

impl CorruptionAction {
    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        [Self::Mask, Self::Random, Self::Keep]
            .get(b as usize)
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlmExample {
    pub original: Vec<TokenId>,
    pub corrupted: Vec<TokenId>,
    /// Original id at selected positions, `None` elsewhere.
    pub labels: Vec<Option<TokenId>>,
    /// Ascending selected positions.
    pub selected: Vec<usize>,
    /// Corruption applied at each entry of `selected`.
    pub actions: Vec<CorruptionAction>,
    pub no_eligible: bool,
}

impl MlmExample {
    pub fn label_pairs(&self) -> impl Iterator<Item = (usize, TokenId)> + '_ {
        self.selected
            .iter()
            .map(|&p| (p, self.labels[p].expect("label at selected position")))
    }
}

fn eligible_positions(ids: &[TokenId], vocab: &Vocab) -> Vec<usize> {
    (0..ids.len())
        .filter(|&p| !vocab.is_special(ids[p]))
        .collect()
}

/// Chooses the positions to predict.
///
/// Token strategy draws `target_count(eligible)` distinct non-special
/// positions. Whole-word strategy shuffles the word groups and takes whole
/// groups until the selected subtoken count first reaches the target, so the
/// last group may overshoot.
pub fn select_positions<R: Rng + ?Sized>(
    ids: &[TokenId],
    groups: &WordGroup,
    vocab: &Vocab,
    config: &MaskingConfig,
    rng: &mut R,
) -> Result<Selection> {
    config.validate()?;
    let eligible = eligible_positions(ids, vocab);
    let target = config.target_count(eligible.len());
    let no_eligible = config.rate > 0.0 && eligible.is_empty();
    if target == 0 {
        return Ok(Selection {
            positions: Vec::new(),
            no_eligible,
        });
    }
    let mut positions = match config.strategy {
        MaskingStrategy::Token => rand::seq::index::sample(rng, eligible.len(), target)
            .into_iter()
            .map(|i| eligible[i])
            .collect::<Vec<_>>(),
        MaskingStrategy::WholeWord => {
            if groups.covered_positions() != eligible.len()
                || groups.ranges.iter().any(|r| r.end > ids.len())
            {
                return Err(Error::InvalidArgument(
                    "word groups do not match the token sequence".into(),
                ));
            }
            let mut order: Vec<_> = groups.ranges.clone();
            order.shuffle(rng);
            let mut chosen = Vec::with_capacity(target + 8);
            for range in order {
                if chosen.len() >= target {
                    break;
                }
                chosen.extend(range);
            }
            chosen
        }
    };
    positions.sort_unstable();
    Ok(Selection {
        positions,
        no_eligible,
    })
}

fn random_regular_id<R: Rng + ?Sized>(vocab: &Vocab, rng: &mut R) -> Option<TokenId> {
    let mut specials = vocab.specials().all();
    specials.sort_unstable();
    let regular = vocab.len().checked_sub(specials.len()).filter(|&n| n > 0)?;
    let mut id = rng.random_range(0..regular) as TokenId;
    for s in specials {
        if s <= id {
            id += 1;
        }
    }
    Some(id)
}

/// Replaces the selected positions and records the labels.
///
/// Under 80-10-10 each selected position independently becomes `[MASK]`
/// with probability 0.8, a uniformly drawn non-special token (possibly the
/// original) with probability 0.1, and stays unchanged otherwise.
pub fn apply_corruption<R: Rng + ?Sized>(
    ids: &[TokenId],
    selection: &Selection,
    vocab: &Vocab,
    config: &MaskingConfig,
    rng: &mut R,
) -> Result<MlmExample> {
    let mask = vocab.specials().mask;
    let mut corrupted = ids.to_vec();
    let mut labels = vec![None; ids.len()];
    let mut actions = Vec::with_capacity(selection.positions.len());
    for &p in &selection.positions {
        let original = *ids
            .get(p)
            .ok_or_else(|| Error::InvalidArgument(format!("selected position {p} out of range")))?;
        if vocab.is_special(original) {
            return Err(Error::InvalidArgument(format!(
                "selected position {p} holds a special token"
            )));
        }
        labels[p] = Some(original);
        let action = match config.corruption {
            Corruption::MaskOnly => CorruptionAction::Mask,
            Corruption::EightyTenTen => {
                let u: f64 = rng.random();
                if u < 0.8 {
                    CorruptionAction::Mask
                } else if u < 0.9 {
                    CorruptionAction::Random
                } else {
                    CorruptionAction::Keep
                }
            }
        };
        corrupted[p] = match action {
            CorruptionAction::Mask => mask,
            CorruptionAction::Random => random_regular_id(vocab, rng).unwrap_or(original),
            CorruptionAction::Keep => original,
        };
        actions.push(action);
    }
    Ok(MlmExample {
        original: ids.to_vec(),
        corrupted,
        labels,
        selected: selection.positions.clone(),
        actions,
        no_eligible: selection.no_eligible,
    })
}

/// Selection followed by corruption, both driven by one generator seeded with `seed`.
pub fn build_example(
    ids: &[TokenId],
    vocab: &Vocab,
    config: &MaskingConfig,
    seed: u64,
) -> Result<MlmExample> {
    let mut rng = seed::rng(seed);
    let groups = match config.strategy {
        MaskingStrategy::WholeWord => word_groups(ids, vocab)?,
        MaskingStrategy::Token => WordGroup::default(),
    };
    let selection = select_positions(ids, &groups, vocab, config, &mut rng)?;
    apply_corruption(ids, &selection, vocab, config, &mut rng)
}
