use crate::corpus::Span;
use crate::error::{Error, Result};
use crate::seed;
use crate::wordpiece::TokenId;

use super::matrix::EmbeddingMatrix;

/// Access to a base model's token vectors without embedding the model.
///
/// `static_vector` is the base embedding row of a token. `contextual_vectors`
/// returns the last-layer hidden states for the tokens in `span` of
/// `sentence` (base token ids), one vector per position.
pub trait EmbeddingProvider: Sync {
    fn dim(&self) -> usize;

    fn static_vector(&self, id: TokenId) -> Result<Vec<f32>>;

    fn contextual_vectors(&self, sentence: &[TokenId], span: Span) -> Result<Vec<Vec<f32>>>;

    /// Whether `contextual_vectors` may be called from several threads at once.
    fn is_reentrant(&self) -> bool {
        true
    }
}

pub(crate) fn check_vector(v: &[f32], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: v.len(),
        });
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Provider(format!(
            "non-finite component at index {i}"
        )));
    }
    Ok(())
}

/// Static rows from a matrix; contextual vectors ignore the context and
/// return the static rows of the span tokens.
#[derive(Debug, Clone)]
pub struct StaticProvider {
    table: EmbeddingMatrix,
}

impl StaticProvider {
    pub fn new(table: EmbeddingMatrix) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &EmbeddingMatrix {
        &self.table
    }
}

impl EmbeddingProvider for StaticProvider {
    fn dim(&self) -> usize {
        self.table.dim()
    }

    fn static_vector(&self, id: TokenId) -> Result<Vec<f32>> {
        self.table
            .row(id as usize)
            .map(<[f32]>::to_vec)
            .ok_or_else(|| {
                Error::Provider(format!(
                    "token id {id} outside static table of {} rows",
                    self.table.len()
                ))
            })
    }

    fn contextual_vectors(&self, sentence: &[TokenId], span: Span) -> Result<Vec<Vec<f32>>> {
        let ids = sentence
            .get(span.range())
            .ok_or_else(|| Error::Provider("span outside sentence".into()))?;
        ids.iter().map(|&id| self.static_vector(id)).collect()
    }
}

/// Deterministic stand-in for a base encoder.
///
/// Static vectors are seeded pseudo-random values in `[-1, 1)`. A contextual
/// vector blends the token's own static vector with the mean static vector
/// of its neighbours within `window` positions, so the same token gets
/// different representations in different sentences.
#[derive(Debug, Clone)]
pub struct SyntheticProvider {
    dim: usize,
    seed: u64,
    window: usize,
    context_weight: f32,
}

impl SyntheticProvider {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            window: 2,
            context_weight: 0.5,
        }
    }

    /// Contextual vectors equal static vectors.
    pub fn context_free(dim: usize, seed: u64) -> Self {
        Self {
            context_weight: 0.0,
            ..Self::new(dim, seed)
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    fn row(&self, id: TokenId) -> Vec<f32> {
        let mut state = seed::derive(self.seed, &[id as u64]);
        (0..self.dim)
            .map(|_| {
                state = seed::derive(state, &[]);
                // top 24 bits -> [0, 1) exactly representable in f32
                let unit = (state >> 40) as f32 / (1u64 << 24) as f32;
                unit * 2.0 - 1.0
            })
            .collect()
    }

    /// Materializes the static table for `rows` token ids.
    pub fn static_table(&self, rows: usize) -> EmbeddingMatrix {
        let mut m = EmbeddingMatrix::new(self.dim);
        for id in 0..rows {
            m.push_row(&self.row(id as TokenId), super::Provenance::Copied)
                .expect("dimension matches");
        }
        m
    }
}

impl EmbeddingProvider for SyntheticProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn static_vector(&self, id: TokenId) -> Result<Vec<f32>> {
        Ok(self.row(id))
    }

    fn contextual_vectors(&self, sentence: &[TokenId], span: Span) -> Result<Vec<Vec<f32>>> {
        if span.is_empty() || span.end > sentence.len() {
            return Err(Error::Provider("span outside sentence".into()));
        }
        let mut out = Vec::with_capacity(span.len());
        for p in span.range() {
            let own = self.row(sentence[p]);
            if self.context_weight == 0.0 {
                out.push(own);
                continue;
            }
            let lo = p.saturating_sub(self.window);
            let hi = (p + self.window + 1).min(sentence.len());
            let mut ctx = vec![0.0f32; self.dim];
            let mut n = 0;
            for q in (lo..hi).filter(|&q| q != p) {
                for (c, x) in ctx.iter_mut().zip(self.row(sentence[q])) {
                    *c += x;
                }
                n += 1;
            }
            let w = self.context_weight;
            let v = own
                .iter()
                .zip(&ctx)
                .map(|(&o, &c)| {
                    if n == 0 {
                        o
                    } else {
                        (1.0 - w) * o + w * c / n as f32
                    }
                })
                .collect();
            out.push(v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic_and_bounded() {
        let p = SyntheticProvider::new(16, 9);
        let a = p.static_vector(42).unwrap();
        assert_eq!(a, p.static_vector(42).unwrap());
        assert_ne!(a, p.static_vector(43).unwrap());
        assert!(a.iter().all(|x| (-1.0..1.0).contains(x)));
    }

    #[test]
    fn context_changes_synthetic_vectors() {
        let p = SyntheticProvider::new(8, 1);
        let a = p
            .contextual_vectors(&[2, 10, 11, 3], Span::new(1, 2))
            .unwrap();
        let b = p
            .contextual_vectors(&[2, 10, 12, 3], Span::new(1, 2))
            .unwrap();
        assert_ne!(a, b);
        let free = SyntheticProvider::context_free(8, 1);
        assert_eq!(
            free.contextual_vectors(&[2, 10, 11, 3], Span::new(1, 3))
                .unwrap(),
            vec![
                free.static_vector(10).unwrap(),
                free.static_vector(11).unwrap()
            ]
        );
    }

    #[test]
    fn static_provider_reads_table() {
        let table = SyntheticProvider::new(4, 3).static_table(10);
        let p = StaticProvider::new(table.clone());
        assert_eq!(p.static_vector(7).unwrap(), table.row(7).unwrap());
        assert!(p.static_vector(10).is_err());
    }
}
