use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::wordpiece::TokenId;

/// A masked language model reduced to what evaluation needs: a probability
/// distribution over the vocabulary at one position of a corrupted sequence.
pub trait MaskedPredictor: Sync {
    fn vocab_size(&self) -> usize;

    /// Distribution over all ids at `position` of `context`. Sums to 1.
    fn distribution(&self, context: &[TokenId], position: usize) -> Vec<f64>;

    /// Probability of `token` at `position`.
    fn prob(&self, context: &[TokenId], position: usize, token: TokenId) -> f64 {
        self.distribution(context, position)
            .get(token as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// Whether `distribution` may be called from several threads at once.
    fn is_reentrant(&self) -> bool {
        true
    }
}

/// Assigns `1/|V|` to every id regardless of context.
#[derive(Debug, Clone, Copy)]
pub struct UniformPredictor {
    vocab_size: usize,
}

impl UniformPredictor {
    pub fn new(vocab_size: usize) -> Self {
        assert!(vocab_size > 0, "empty vocabulary");
        Self { vocab_size }
    }
}

impl MaskedPredictor for UniformPredictor {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn distribution(&self, _: &[TokenId], _: usize) -> Vec<f64> {
        vec![1.0 / self.vocab_size as f64; self.vocab_size]
    }

    fn prob(&self, _: &[TokenId], _: usize, token: TokenId) -> f64 {
        if (token as usize) < self.vocab_size {
            1.0 / self.vocab_size as f64
        } else {
            0.0
        }
    }
}

/// A small context-sensitive stand-in for a real masked model.
///
/// Each visible neighbour contributes a bigram estimate smoothed towards the
/// add-one unigram distribution `u` with a Dirichlet prior of weight `beta`:
///
/// ```text
/// P_left(w | l)  = (c(l, w) + beta * u(w)) / (c(l, ·) + beta)
/// P_right(w | r) = (c(w, r) + beta * u(w)) / (c(·, r) + beta)
/// ```
///
/// A neighbour that is `[MASK]` or beyond the sequence falls back to `u`.
/// The context estimate is the mean of the two sides. When the position
/// itself is not `[MASK]`, the visible token receives an extra `alpha` of
/// probability mass: `alpha * [w = x_p] + (1 - alpha) * context`.
#[derive(Debug, Clone)]
pub struct BackoffBigramPredictor {
    vocab_size: usize,
    mask: TokenId,
    beta: f64,
    alpha: f64,
    unigram: Vec<u64>,
    total: u64,
    pairs: HashMap<(TokenId, TokenId), u64>,
    as_left: Vec<u64>,
    as_right: Vec<u64>,
}

impl BackoffBigramPredictor {
    pub const DEFAULT_BETA: f64 = 10.0;
    pub const DEFAULT_ALPHA: f64 = 0.5;

    pub fn train(sequences: &[Vec<TokenId>], vocab_size: usize, mask: TokenId) -> Result<Self> {
        Self::with_params(
            sequences,
            vocab_size,
            mask,
            Self::DEFAULT_BETA,
            Self::DEFAULT_ALPHA,
        )
    }

    pub fn with_params(
        sequences: &[Vec<TokenId>],
        vocab_size: usize,
        mask: TokenId,
        beta: f64,
        alpha: f64,
    ) -> Result<Self> {
        if vocab_size == 0 || beta.is_nan() || beta <= 0.0 || !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(
                "bigram predictor needs a vocabulary, beta > 0 and alpha in [0, 1)".into(),
            ));
        }
        let mut p = Self {
            vocab_size,
            mask,
            beta,
            alpha,
            unigram: vec![0; vocab_size],
            total: 0,
            pairs: HashMap::new(),
            as_left: vec![0; vocab_size],
            as_right: vec![0; vocab_size],
        };
        for seq in sequences {
            if let Some(&bad) = seq.iter().find(|&&id| id as usize >= vocab_size) {
                return Err(Error::InvalidArgument(format!(
                    "id {bad} outside vocabulary of {vocab_size}"
                )));
            }
            for &id in seq {
                p.unigram[id as usize] += 1;
                p.total += 1;
            }
            for w in seq.windows(2) {
                *p.pairs.entry((w[0], w[1])).or_default() += 1;
                p.as_left[w[0] as usize] += 1;
                p.as_right[w[1] as usize] += 1;
            }
        }
        Ok(p)
    }

    fn unigram_prob(&self, w: TokenId) -> f64 {
        (self.unigram[w as usize] + 1) as f64 / (self.total + self.vocab_size as u64) as f64
    }

    fn visible(&self, context: &[TokenId], i: Option<usize>) -> Option<TokenId> {
        let id = *context.get(i?)?;
        (id != self.mask && (id as usize) < self.vocab_size).then_some(id)
    }

    fn context_prob(&self, left: Option<TokenId>, right: Option<TokenId>, w: TokenId) -> f64 {
        let u = self.unigram_prob(w);
        let pl = match left {
            Some(l) => {
                let c = self.pairs.get(&(l, w)).copied().unwrap_or(0) as f64;
                (c + self.beta * u) / (self.as_left[l as usize] as f64 + self.beta)
            }
            None => u,
        };
        let pr = match right {
            Some(r) => {
                let c = self.pairs.get(&(w, r)).copied().unwrap_or(0) as f64;
                (c + self.beta * u) / (self.as_right[r as usize] as f64 + self.beta)
            }
            None => u,
        };
        0.5 * (pl + pr)
    }
}

impl MaskedPredictor for BackoffBigramPredictor {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn distribution(&self, context: &[TokenId], position: usize) -> Vec<f64> {
        (0..self.vocab_size as TokenId)
            .map(|w| self.prob(context, position, w))
            .collect()
    }

    fn prob(&self, context: &[TokenId], position: usize, token: TokenId) -> f64 {
        if token as usize >= self.vocab_size {
            return 0.0;
        }
        let left = self.visible(context, position.checked_sub(1));
        let right = self.visible(context, position.checked_add(1));
        let ctx = self.context_prob(left, right, token);
        match self.visible(context, Some(position)) {
            Some(x) => {
                let identity = if x == token { self.alpha } else { 0.0 };
                identity + (1.0 - self.alpha) * ctx
            }
            None => ctx,
        }
    }
}
