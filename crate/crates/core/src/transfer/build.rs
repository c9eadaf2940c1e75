use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ScanResult;
use crate::error::{Error, Result};
use crate::seed;
use crate::wordpiece::{TokenId, Vocab};

use super::distill::Distiller;
use super::mapping::TokenMapping;
use super::matrix::{EmbeddingMatrix, Provenance};
use super::provider::{check_vector, EmbeddingProvider};

/// The four ways of initializing the token embedding matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Domain vocabulary, every row drawn from N(0, σ²).
    Scratch,
    /// Base vocabulary kept as is, every row copied.
    Continued,
    /// Domain vocabulary; shared rows copied, new rows distilled.
    Averaged,
    /// Domain vocabulary; shared rows copied, new rows contextualized.
    Contextualized,
}

impl InitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitMode::Scratch => "scratch",
            InitMode::Continued => "continued",
            InitMode::Averaged => "averaged",
            InitMode::Contextualized => "contextualized",
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scratch" => Ok(InitMode::Scratch),
            "continued" => Ok(InitMode::Continued),
            "averaged" => Ok(InitMode::Averaged),
            "contextualized" => Ok(InitMode::Contextualized),
            other => Err(Error::InvalidArgument(format!(
                "unknown init mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    pub include_distilled: bool,
    /// σ of the random initializer.
    pub init_std: f64,
    /// Warn when the share of new tokens left without any context exceeds
    /// this fraction of the vocabulary.
    pub fallback_warning_threshold: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            include_distilled: true,
            init_std: 0.02,
            fallback_warning_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    /// New tokens whose base segmentation hits `[UNK]`; initialized randomly.
    pub undistillable: Vec<String>,
    /// New tokens with no sampled context; given their distilled vector.
    pub without_context: Vec<String>,
    pub warnings: Vec<String>,
}

pub struct TransferInputs<'a, P: ?Sized> {
    pub domain: &'a Vocab,
    pub base: &'a Vocab,
    pub mapping: &'a TokenMapping,
    pub provider: &'a P,
}

fn random_row(dim: usize, std: f64, seed: u64) -> Vec<f32> {
    let normal = Normal::new(0.0, std).expect("finite σ");
    let mut rng = seed::rng(seed);
    (0..dim).map(|_| normal.sample(&mut rng) as f32).collect()
}

fn narrow(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

enum RowPlan {
    Copy(TokenId),
    Synthesize(String),
}

/// Builds the input embedding matrix for `mode`.
///
/// `hits` is only read in contextualized mode, where it must hold an entry
/// (possibly empty) for every new token.
pub fn build_embedding_matrix<P>(
    mode: InitMode,
    inputs: &TransferInputs<'_, P>,
    hits: Option<&ScanResult>,
    seed: u64,
    options: &BuildOptions,
) -> Result<(EmbeddingMatrix, BuildReport)>
where
    P: EmbeddingProvider + ?Sized,
{
    let provider = inputs.provider;
    let dim = provider.dim();
    let mut report = BuildReport::default();

    match mode {
        InitMode::Scratch => {
            let normal = Normal::new(0.0, options.init_std)
                .map_err(|e| Error::InvalidArgument(format!("init_std: {e}")))?;
            let mut rng = seed::rng(seed);
            let mut m = EmbeddingMatrix::with_capacity(dim, inputs.domain.len());
            for _ in 0..inputs.domain.len() {
                let row: Vec<f32> = (0..dim).map(|_| normal.sample(&mut rng) as f32).collect();
                m.push_row(&row, Provenance::Random)?;
            }
            return Ok((m, report));
        }
        InitMode::Continued => {
            let mut m = EmbeddingMatrix::with_capacity(dim, inputs.base.len());
            for id in 0..inputs.base.len() {
                let row = provider.static_vector(id as TokenId)?;
                check_vector(&row, dim)?;
                m.push_row(&row, Provenance::Copied)?;
            }
            return Ok((m, report));
        }
        InitMode::Averaged | InitMode::Contextualized => {}
    }

    if inputs.mapping.domain_size() != inputs.domain.len() {
        return Err(Error::InvalidArgument(
            "token mapping does not belong to the domain vocabulary".into(),
        ));
    }

    let contextual = mode == InitMode::Contextualized;
    if contextual {
        let missing: Vec<String> = inputs
            .mapping
            .new
            .iter()
            .filter_map(|&id| inputs.domain.token(id))
            .filter(|t| hits.is_none_or(|h| h.get(t).is_none()))
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingHits(missing));
        }
    }

    let plans: Vec<RowPlan> = (0..inputs.domain.len())
        .map(|id| match inputs.mapping.base_id(id as TokenId) {
            Some(b) => RowPlan::Copy(b),
            None => RowPlan::Synthesize(inputs.domain.tokens()[id].clone()),
        })
        .collect();

    let distiller = Distiller::new(inputs.domain, inputs.base, provider)
        .include_distilled(options.include_distilled);
    let make_row = |plan: &RowPlan| -> Result<(Vec<f32>, Provenance)> {
        match plan {
            RowPlan::Copy(b) => {
                let row = provider.static_vector(*b)?;
                check_vector(&row, dim)?;
                Ok((row, Provenance::Copied))
            }
            RowPlan::Synthesize(token) => {
                let token_hits = if contextual {
                    hits.and_then(|h| h.get(token)).map(|t| t.hits.as_slice())
                } else {
                    None
                };
                let result = match token_hits {
                    Some(h) if !h.is_empty() => distiller
                        .contextualize(token, h)
                        .map(|v| (narrow(&v), Provenance::Contextualized)),
                    _ => distiller
                        .distill(token)
                        .map(|v| (narrow(&v), Provenance::Distilled)),
                };
                match result {
                    Err(Error::Undistillable(_)) => {
                        let s = seed::derive(seed, &[seed::fnv1a(token.as_bytes())]);
                        Ok((random_row(dim, options.init_std, s), Provenance::Random))
                    }
                    other => other,
                }
            }
        }
    };

    let rows: Vec<(Vec<f32>, Provenance)> = if provider.is_reentrant() {
        plans.par_iter().map(make_row).collect::<Result<_>>()?
    } else {
        plans.iter().map(make_row).collect::<Result<_>>()?
    };

    let mut m = EmbeddingMatrix::with_capacity(dim, rows.len());
    for ((row, prov), plan) in rows.into_iter().zip(&plans) {
        if let RowPlan::Synthesize(token) = plan {
            match prov {
                Provenance::Random => report.undistillable.push(token.clone()),
                Provenance::Distilled if contextual => report.without_context.push(token.clone()),
                _ => {}
            }
        }
        m.push_row(&row, prov)?;
    }

    if !report.undistillable.is_empty() {
        report.warnings.push(format!(
            "{} new tokens could not be distilled and were initialized randomly",
            report.undistillable.len()
        ));
    }
    if contextual && !inputs.domain.is_empty() {
        let share = report.without_context.len() as f64 / inputs.domain.len() as f64;
        if share > options.fallback_warning_threshold {
            report.warnings.push(format!(
                "{:.1}% of the vocabulary had no context and fell back to distilled vectors (threshold {:.1}%)",
                share * 100.0,
                options.fallback_warning_threshold * 100.0
            ));
        }
    }
    Ok((m, report))
}
