use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::Boundaries;
use crate::corpus::{
    ContextCount, CorpusSource, ScanOptions, Segmenter, CONTEXT_COUNT_MAX, CONTEXT_COUNT_MIN,
};
use crate::curriculum::{
    default_phases, split_budget, CurriculumPhase, LrPlan, PhaseVersion, DEFAULT_BUDGET_RATIO,
};
use crate::error::{Error, Result};
use crate::masking::{Corruption, MaskingConfig, MaskingStrategy};
use crate::transfer::{BuildOptions, InitMode};
use crate::wordpiece::TokenizerOptions;

/// Everything a run depends on. Loaded from TOML, then overridden by flags;
/// the hash of the resulting value identifies the run in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub paths: PathsConfig,
    pub tokenizer: TokenizerOptions,
    pub vocab: VocabConfig,
    pub scan: ScanConfig,
    pub transfer: TransferConfig,
    pub masking: MaskingSection,
    pub curriculum: CurriculumConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            workers: 1,
            paths: PathsConfig::default(),
            tokenizer: TokenizerOptions::default(),
            vocab: VocabConfig::default(),
            scan: ScanConfig::default(),
            transfer: TransferConfig::default(),
            masking: MaskingSection::default(),
            curriculum: CurriculumConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Corpus directories (every `*.txt` inside) or individual files.
    pub corpus: Vec<PathBuf>,
    /// Second corpus for frequency comparison.
    pub reference_corpus: Vec<PathBuf>,
    pub base_vocab: Option<PathBuf>,
    pub domain_vocab: Option<PathBuf>,
    /// Static embeddings of the base model, indexed by `base_vocab`.
    pub base_matrix: Option<PathBuf>,
    /// Matrix to analyse.
    pub matrix: Option<PathBuf>,
    /// One scan target per line.
    pub targets: Option<PathBuf>,
    pub hits: Option<PathBuf>,
    pub requests: Option<PathBuf>,
    pub context_vectors: Option<PathBuf>,
    pub frequencies: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub target_size: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            target_size: 30_522,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub cap: usize,
    pub count: ContextCount,
    pub segmenter: Segmenter,
    pub dedup: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            cap: CONTEXT_COUNT_MAX,
            count: ContextCount::Uniform,
            segmenter: Segmenter::RuleBased,
            dedup: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    pub mode: InitMode,
    pub include_distilled: bool,
    pub init_std: f64,
    pub fallback_warning_threshold: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        let b = BuildOptions::default();
        Self {
            mode: InitMode::Contextualized,
            include_distilled: b.include_distilled,
            init_std: b.init_std,
            fallback_warning_threshold: b.fallback_warning_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskingSection {
    /// When set, overrides the three fields below with that phase's setup.
    pub phase: Option<PhaseVersion>,
    pub masking_strategy: MaskingStrategy,
    pub masking_rate: f64,
    pub corruption_strategy: Corruption,
    pub max_len: usize,
}

impl Default for MaskingSection {
    fn default() -> Self {
        let m = MaskingConfig::default();
        Self {
            phase: None,
            masking_strategy: m.strategy,
            masking_rate: m.rate,
            corruption_strategy: m.corruption,
            max_len: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    pub total_steps: u64,
    pub budget_ratio: [f64; 4],
    /// Explicit per-phase step counts; replaces `total_steps` and `budget_ratio`.
    pub steps: Option<[u64; 4]>,
    pub learning_rate: f64,
    pub warmup_proportion: f64,
    /// Examples per config when ranking difficulty.
    pub eval_examples: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        let plan = LrPlan::default();
        Self {
            total_steps: 10_000,
            budget_ratio: DEFAULT_BUDGET_RATIO,
            steps: None,
            learning_rate: plan.peak_lr,
            warmup_proportion: plan.warmup_fraction,
            eval_examples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub boundaries: Boundaries,
    pub pairs: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            boundaries: Boundaries::default(),
            pairs: 10_000,
        }
    }
}

/// Input paths a command cannot run without.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Need {
    Corpus,
    ReferenceCorpus,
    BaseVocab,
    DomainVocab,
    BaseMatrix,
    Matrix,
    Targets,
    Hits,
    Requests,
    ContextVectors,
    Frequencies,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(vec![format!("{}: {}", path.display(), e.message())]))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn optional_path(&self, need: Need) -> (&'static str, Option<&Path>) {
        let p = &self.paths;
        match need {
            Need::BaseVocab => ("paths.base_vocab", p.base_vocab.as_deref()),
            Need::DomainVocab => ("paths.domain_vocab", p.domain_vocab.as_deref()),
            Need::BaseMatrix => ("paths.base_matrix", p.base_matrix.as_deref()),
            Need::Matrix => ("paths.matrix", p.matrix.as_deref()),
            Need::Targets => ("paths.targets", p.targets.as_deref()),
            Need::Hits => ("paths.hits", p.hits.as_deref()),
            Need::Requests => ("paths.requests", p.requests.as_deref()),
            Need::ContextVectors => ("paths.context_vectors", p.context_vectors.as_deref()),
            Need::Frequencies => ("paths.frequencies", p.frequencies.as_deref()),
            Need::Corpus | Need::ReferenceCorpus => unreachable!("list-valued"),
        }
    }

    /// Checks the whole config plus the paths in `needs`, reporting every
    /// problem found rather than the first.
    pub fn validate(&self, needs: &[Need]) -> Result<()> {
        let mut problems = Vec::new();
        if self.workers == 0 {
            problems.push("workers must be at least 1".to_string());
        }
        if self.vocab.target_size == 0 {
            problems.push("vocab.target_size must be positive".into());
        }
        if !(CONTEXT_COUNT_MIN..=CONTEXT_COUNT_MAX).contains(&self.scan.cap) {
            problems.push(format!(
                "scan.cap must be in [{CONTEXT_COUNT_MIN}, {CONTEXT_COUNT_MAX}]"
            ));
        }
        if let Err(e) = self.masking_config().validate() {
            problems.push(format!("masking: {e}"));
        }
        if self.masking.max_len < 2 {
            problems.push(format!(
                "masking.max_len {} must be at least 2",
                self.masking.max_len
            ));
        }
        if let Err(e) = self.lr_plan().validate() {
            problems.push(format!("curriculum: {e}"));
        }
        if self.curriculum.steps.is_none() {
            if let Err(e) = split_budget(self.curriculum.total_steps, &self.curriculum.budget_ratio)
            {
                problems.push(format!("curriculum.budget_ratio: {e}"));
            }
        }
        if self.phase_steps().iter().sum::<u64>() == 0 {
            problems.push("curriculum has no steps".into());
        }
        if self.curriculum.eval_examples == 0 {
            problems.push("curriculum.eval_examples must be at least 1".into());
        }
        if self.analysis.pairs == 0 {
            problems.push("analysis.pairs must be at least 1".into());
        }
        if !(self.transfer.init_std.is_finite() && self.transfer.init_std > 0.0) {
            problems.push(format!(
                "transfer.init_std {} must be positive",
                self.transfer.init_std
            ));
        }
        for &need in needs {
            match need {
                Need::Corpus | Need::ReferenceCorpus => {
                    let (key, list) = if need == Need::Corpus {
                        ("paths.corpus", &self.paths.corpus)
                    } else {
                        ("paths.reference_corpus", &self.paths.reference_corpus)
                    };
                    if list.is_empty() {
                        problems.push(format!("{key} is required"));
                    }
                    for p in list.iter().filter(|p| !p.exists()) {
                        problems.push(format!("{key}: `{}` does not exist", p.display()));
                    }
                }
                _ => match self.optional_path(need) {
                    (key, None) => problems.push(format!("{key} is required")),
                    (key, Some(p)) if !p.exists() => {
                        problems.push(format!("{key}: `{}` does not exist", p.display()))
                    }
                    _ => {}
                },
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn path(&self, need: Need) -> &Path {
        self.optional_path(need).1.expect("validated path")
    }

    pub fn masking_config(&self) -> MaskingConfig {
        match self.masking.phase {
            Some(v) => crate::curriculum::phase_config(v),
            None => MaskingConfig::new(
                self.masking.masking_strategy,
                self.masking.masking_rate,
                self.masking.corruption_strategy,
            ),
        }
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            cap: self.scan.cap,
            count: self.scan.count,
            seed: self.seed,
            workers: self.workers,
            segmenter: self.scan.segmenter,
            dedup: self.scan.dedup,
        }
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            include_distilled: self.transfer.include_distilled,
            init_std: self.transfer.init_std,
            fallback_warning_threshold: self.transfer.fallback_warning_threshold,
        }
    }

    pub fn lr_plan(&self) -> LrPlan {
        LrPlan {
            peak_lr: self.curriculum.learning_rate,
            warmup_fraction: self.curriculum.warmup_proportion,
        }
    }

    pub fn phase_steps(&self) -> [u64; 4] {
        self.curriculum.steps.unwrap_or_else(|| {
            split_budget(self.curriculum.total_steps, &self.curriculum.budget_ratio)
                .unwrap_or([0; 4])
        })
    }

    pub fn phases(&self) -> Vec<CurriculumPhase> {
        default_phases(self.phase_steps(), self.curriculum.learning_rate)
    }

    pub fn corpus(&self) -> Result<CorpusSource> {
        corpus_from(&self.paths.corpus)
    }

    pub fn reference_corpus(&self) -> Result<CorpusSource> {
        corpus_from(&self.paths.reference_corpus)
    }
}

/// Directories contribute their `*.txt` files in name order; files are taken as is.
pub fn corpus_from(paths: &[PathBuf]) -> Result<CorpusSource> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            files.extend(
                CorpusSource::from_dir(p)?
                    .shards()
                    .iter()
                    .filter_map(|s| s.path().map(Path::to_path_buf)),
            );
        } else {
            files.push(p.clone());
        }
    }
    Ok(CorpusSource::from_files(files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate(&[]).unwrap();
    }

    #[test]
    fn all_problems_reported() {
        let mut c = RunConfig {
            workers: 0,
            ..RunConfig::default()
        };
        c.masking.masking_rate = 2.0;
        c.paths.domain_vocab = Some("/no/such/vocab.txt".into());
        let Err(Error::Config(problems)) = c.validate(&[Need::DomainVocab, Need::Corpus]) else {
            panic!("expected config error");
        };
        assert_eq!(problems.len(), 4, "{problems:?}");
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let mut c = RunConfig::default();
        c.masking.phase = Some(PhaseVersion::V03);
        c.curriculum.steps = Some([1, 2, 3, 4]);
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
        let t: RunConfig = toml::from_str(
            "[masking]\nmasking_strategy = \"whole_word\"\ncorruption_strategy = \"mask_only\"",
        )
        .unwrap();
        assert_eq!(t.masking_config().strategy, MaskingStrategy::WholeWord);
    }

    #[test]
    fn hash_tracks_changes() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
