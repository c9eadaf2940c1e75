use crate::corpus::{SentenceHit, Span};
use crate::error::{Error, Result};
use crate::numeric::{mean_vectors, widen};
use crate::wordpiece::{TokenId, Vocab, CONTINUATION_PREFIX};

use super::provider::{check_vector, EmbeddingProvider};

/// Synthesizes vectors for domain tokens from a base model.
///
/// A new token is re-segmented with the base vocabulary (a `##` token
/// starts in continuation mode). Its distilled vector is the mean of the
/// base static vectors of those pieces. Its contextualized vector averages
/// the distilled vector with one representation per sampled occurrence,
/// each being the mean of the base model's last-layer vectors over the
/// occurrence's base-piece span.
pub struct Distiller<'a, P: ?Sized> {
    domain: &'a Vocab,
    base: &'a Vocab,
    provider: &'a P,
    include_distilled: bool,
}

/// A domain sentence re-segmented piece by piece with the base vocabulary
/// and wrapped in base `[CLS]`/`[SEP]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedSentence {
    pub base_ids: Vec<TokenId>,
    /// Base span of every domain position.
    pub spans: Vec<Span>,
}

impl AlignedSentence {
    /// Base span covering the domain positions in `domain_span`.
    pub fn base_span(&self, domain_span: Span) -> Option<Span> {
        if domain_span.is_empty() || domain_span.end > self.spans.len() {
            return None;
        }
        Some(Span::new(
            self.spans[domain_span.start].start,
            self.spans[domain_span.end - 1].end,
        ))
    }
}

/// Base pieces of a domain token string, `None` if some remainder has no match.
fn segment(base: &Vocab, token: &str) -> Option<Vec<TokenId>> {
    match token.strip_prefix(CONTINUATION_PREFIX) {
        Some(body) if !body.is_empty() => base.wordpiece(body, true),
        _ => base.wordpiece(token, false),
    }
}

/// Re-segments a domain sentence piece by piece with the base vocabulary
/// and wraps it in base `[CLS]`/`[SEP]`.
pub fn align_sentence(
    domain: &Vocab,
    base: &Vocab,
    sentence: &[TokenId],
) -> Result<AlignedSentence> {
    let ds = domain.specials();
    let bs = base.specials();
    let mut base_ids = vec![bs.cls];
    let mut spans = Vec::with_capacity(sentence.len());
    for &id in sentence {
        let start = base_ids.len();
        if domain.is_special(id) {
            let mapped = [
                (ds.pad, bs.pad),
                (ds.unk, bs.unk),
                (ds.cls, bs.cls),
                (ds.sep, bs.sep),
                (ds.mask, bs.mask),
            ]
            .iter()
            .find(|(d, _)| *d == id)
            .map(|(_, b)| *b)
            .unwrap_or(bs.unk);
            base_ids.push(mapped);
        } else {
            let token = domain.token(id).ok_or_else(|| {
                Error::InvalidArgument(format!("token id {id} not in domain vocabulary"))
            })?;
            match segment(base, token) {
                Some(pieces) => base_ids.extend(pieces),
                None => base_ids.push(bs.unk),
            }
        }
        spans.push(Span::new(start, base_ids.len()));
    }
    base_ids.push(bs.sep);
    Ok(AlignedSentence { base_ids, spans })
}

impl<'a, P: EmbeddingProvider + ?Sized> Distiller<'a, P> {
    pub fn new(domain: &'a Vocab, base: &'a Vocab, provider: &'a P) -> Self {
        Self {
            domain,
            base,
            provider,
            include_distilled: true,
        }
    }

    /// Whether the distilled vector takes part in the contextual average
    /// (default `true`). With `false` the average runs over occurrences only.
    pub fn include_distilled(mut self, include: bool) -> Self {
        self.include_distilled = include;
        self
    }

    pub fn domain(&self) -> &Vocab {
        self.domain
    }

    pub fn base(&self) -> &Vocab {
        self.base
    }

    /// The base pieces `token` distills from. Errors if any piece would be `[UNK]`.
    pub fn base_pieces(&self, token: &str) -> Result<Vec<TokenId>> {
        if let Some(id) = self.base.id(token) {
            return Ok(vec![id]);
        }
        match segment(self.base, token) {
            Some(p) if !p.contains(&self.base.specials().unk) => Ok(p),
            _ => Err(Error::Undistillable(token.to_string())),
        }
    }

    fn static_vector(&self, id: TokenId) -> Result<Vec<f32>> {
        let v = self.provider.static_vector(id)?;
        check_vector(&v, self.provider.dim())?;
        Ok(v)
    }

    /// Mean of the base static vectors of the token's pieces.
    pub fn distill(&self, token: &str) -> Result<Vec<f64>> {
        let pieces = self.base_pieces(token)?;
        let vectors = pieces
            .iter()
            .map(|&p| self.static_vector(p).map(|v| widen(&v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean_vectors(&vectors))
    }

    pub fn align(&self, sentence: &[TokenId]) -> Result<AlignedSentence> {
        align_sentence(self.domain, self.base, sentence)
    }

    fn occurrence(&self, aligned: &AlignedSentence, span: Span) -> Result<Vec<f64>> {
        let base_span = aligned
            .base_span(span)
            .ok_or_else(|| Error::InvalidArgument(format!("span {span:?} outside sentence")))?;
        let vectors = self
            .provider
            .contextual_vectors(&aligned.base_ids, base_span)?;
        if vectors.len() != base_span.len() {
            return Err(Error::Provider(format!(
                "expected {} contextual vectors, got {}",
                base_span.len(),
                vectors.len()
            )));
        }
        let wide = vectors
            .iter()
            .map(|v| check_vector(v, self.provider.dim()).map(|_| widen(v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean_vectors(&wide))
    }

    /// One contextual representation per occurrence, in hit order.
    pub fn occurrence_vectors(&self, token: &str, hits: &[SentenceHit]) -> Result<Vec<Vec<f64>>> {
        let mut reps = Vec::new();
        for hit in hits {
            let aligned = self.align(&hit.sentence)?;
            for &span in &hit.spans {
                let at = hit.sentence.get(span.range()).unwrap_or(&[]);
                let found = self.domain.decode(at);
                if span.len() != 1 || self.domain.token(at[0]) != Some(token) {
                    return Err(Error::InvalidArgument(format!(
                        "hit span {span:?} holds `{found}`, not `{token}`"
                    )));
                }
                reps.push(self.occurrence(&aligned, span)?);
            }
        }
        Ok(reps)
    }

    /// Averages the distilled vector with the token's in-context
    /// representations; with no hits this is the distilled vector itself.
    pub fn contextualize(&self, token: &str, hits: &[SentenceHit]) -> Result<Vec<f64>> {
        let distilled = self.distill(token)?;
        let reps = self.occurrence_vectors(token, hits)?;
        if reps.is_empty() {
            return Ok(distilled);
        }
        if self.include_distilled {
            let mut all = Vec::with_capacity(reps.len() + 1);
            all.push(distilled);
            all.extend(reps);
            Ok(mean_vectors(&all))
        } else {
            Ok(mean_vectors(&reps))
        }
    }
}
