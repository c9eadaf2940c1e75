use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use crate::analysis::{
    anisotropy, bucket_frequencies, compare_corpora, export_freq_stratified, Boundaries,
    CATEGORY_NAMES,
};
use crate::corpus::{
    count_frequencies, read_hits, scan_for_tokens, targets_sidecar, write_hits, ContextCount,
    FrequencyTable,
};
use crate::curriculum::{
    difficulty_rank, emit_schedule, example_seed, phase_configs, write_difficulty_tsv,
    BackoffBigramPredictor, PhaseVersion,
};
use crate::error::{Error, Result};
use crate::masking::{
    build_example, write_examples_binary, write_examples_jsonl, write_sequences, Corruption,
    MaskingStrategy,
};
use crate::transfer::exchange::{
    plan_requests, read_context_vectors, read_requests, write_requests, StoredProvider,
};
use crate::transfer::{
    build_embedding_matrix, diff_vocab, BuildReport, EmbeddingMatrix, EmbeddingProvider, InitMode,
    MatrixManifest, StaticProvider, TransferInputs,
};
use crate::wordpiece::{train_vocab, TrainerConfig, Vocab};

use super::config::{Need, RunConfig};
use super::pack::pack_sequences;
use super::{Command, Outcome, Reproducibility};

#[derive(Debug, Args)]
pub struct TrainVocabArgs {
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    /// Target vocabulary size
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    #[arg(long)]
    pub domain_vocab: Option<PathBuf>,
    /// Without `--targets`, the new tokens of the domain vocabulary are scanned
    #[arg(long)]
    pub base_vocab: Option<PathBuf>,
    /// File with one target token per line
    #[arg(long)]
    pub targets: Option<PathBuf>,
    #[arg(long)]
    pub cap: Option<usize>,
    /// Keep exactly `cap` sentences per token instead of a random count
    #[arg(long)]
    pub fixed_count: bool,
    /// Sample among distinct sentences
    #[arg(long)]
    pub dedup: bool,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    #[arg(long)]
    pub domain_vocab: Option<PathBuf>,
    #[arg(long)]
    pub base_vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RequestsArgs {
    #[arg(long)]
    pub domain_vocab: Option<PathBuf>,
    #[arg(long)]
    pub base_vocab: Option<PathBuf>,
    #[arg(long)]
    pub hits: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildMatrixArgs {
    /// scratch, continued, averaged or contextualized
    #[arg(long)]
    pub mode: Option<InitMode>,
    #[arg(long)]
    pub domain_vocab: Option<PathBuf>,
    #[arg(long)]
    pub base_vocab: Option<PathBuf>,
    /// Static embedding table of the base model
    #[arg(long)]
    pub base_matrix: Option<PathBuf>,
    #[arg(long)]
    pub hits: Option<PathBuf>,
    /// Request file the context vectors answer
    #[arg(long)]
    pub requests: Option<PathBuf>,
    /// Encoder answers; without them contextual vectors are the static rows
    #[arg(long)]
    pub context_vectors: Option<PathBuf>,
    /// Average occurrence vectors only, leaving out the distilled vector
    #[arg(long)]
    pub exclude_distilled: bool,
}

#[derive(Debug, Args)]
pub struct CollateArgs {
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    #[arg(long = "vocab")]
    pub domain_vocab: Option<PathBuf>,
    /// Curriculum phase whose masking setup to use (0.1 to 0.4)
    #[arg(long)]
    pub phase: Option<PhaseVersion>,
    #[arg(long)]
    pub masking_strategy: Option<MaskingStrategy>,
    #[arg(long)]
    pub masking_rate: Option<f64>,
    #[arg(long)]
    pub corruption_strategy: Option<Corruption>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub total_steps: Option<u64>,
    /// Explicit steps of the four phases, comma separated
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<u64>>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub warmup_proportion: Option<f64>,
    /// Rank the phase configs by pseudo-perplexity of a bigram predictor
    #[arg(long)]
    pub difficulty: bool,
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    #[arg(long = "vocab")]
    pub domain_vocab: Option<PathBuf>,
    #[arg(long)]
    pub eval_examples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    /// Second corpus to compare against
    #[arg(long)]
    pub reference: Vec<PathBuf>,
    /// Three ascending category cut points, comma separated
    #[arg(long, value_delimiter = ',')]
    pub boundaries: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct AnisotropyArgs {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Vocabulary of the matrix rows, for the frequency-stratified export
    #[arg(long = "vocab")]
    pub domain_vocab: Option<PathBuf>,
    /// Frequency TSV as written by `freq`
    #[arg(long)]
    pub frequencies: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub boundaries: Option<Vec<u64>>,
}

fn set<T>(slot: &mut Option<T>, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *slot = Some(v.clone());
    }
}

fn set_list(slot: &mut Vec<PathBuf>, value: &[PathBuf]) {
    if !value.is_empty() {
        *slot = value.to_vec();
    }
}

fn boundaries_from(values: &[u64]) -> Result<Boundaries> {
    let b: [u64; 3] = values
        .try_into()
        .map_err(|_| Error::Config(vec!["boundaries need exactly three values".into()]))?;
    Boundaries::new(b).map_err(|e| Error::Config(vec![format!("analysis.boundaries: {e}")]))
}

pub(super) fn apply_overrides(command: &Command, c: &mut RunConfig) -> Result<()> {
    let p = &mut c.paths;
    match command {
        Command::TrainVocab(a) => {
            set_list(&mut p.corpus, &a.corpus);
            if let Some(s) = a.size {
                c.vocab.target_size = s;
            }
        }
        Command::Scan(a) => {
            set_list(&mut p.corpus, &a.corpus);
            set(&mut p.domain_vocab, &a.domain_vocab);
            set(&mut p.base_vocab, &a.base_vocab);
            set(&mut p.targets, &a.targets);
            if let Some(cap) = a.cap {
                c.scan.cap = cap;
            }
            if a.fixed_count {
                c.scan.count = ContextCount::Fixed;
            }
            c.scan.dedup |= a.dedup;
        }
        Command::Diff(a) => {
            set(&mut p.domain_vocab, &a.domain_vocab);
            set(&mut p.base_vocab, &a.base_vocab);
        }
        Command::Requests(a) => {
            set(&mut p.domain_vocab, &a.domain_vocab);
            set(&mut p.base_vocab, &a.base_vocab);
            set(&mut p.hits, &a.hits);
        }
        Command::BuildMatrix(a) => {
            set(&mut p.domain_vocab, &a.domain_vocab);
            set(&mut p.base_vocab, &a.base_vocab);
            set(&mut p.base_matrix, &a.base_matrix);
            set(&mut p.hits, &a.hits);
            set(&mut p.requests, &a.requests);
            set(&mut p.context_vectors, &a.context_vectors);
            if let Some(m) = a.mode {
                c.transfer.mode = m;
            }
            if a.exclude_distilled {
                c.transfer.include_distilled = false;
            }
        }
        Command::Collate(a) => {
            set_list(&mut p.corpus, &a.corpus);
            set(&mut p.domain_vocab, &a.domain_vocab);
            let m = &mut c.masking;
            set(&mut m.phase, &a.phase);
            if let Some(s) = a.masking_strategy {
                m.masking_strategy = s;
                m.phase = None;
            }
            if let Some(r) = a.masking_rate {
                m.masking_rate = r;
                m.phase = None;
            }
            if let Some(s) = a.corruption_strategy {
                m.corruption_strategy = s;
                m.phase = None;
            }
            if let Some(l) = a.max_len {
                m.max_len = l;
            }
        }
        Command::Schedule(a) => {
            set_list(&mut p.corpus, &a.corpus);
            set(&mut p.domain_vocab, &a.domain_vocab);
            let cc = &mut c.curriculum;
            if let Some(t) = a.total_steps {
                cc.total_steps = t;
                cc.steps = None;
            }
            if let Some(s) = &a.steps {
                let steps: [u64; 4] = s
                    .as_slice()
                    .try_into()
                    .map_err(|_| Error::Config(vec!["--steps needs four values".into()]))?;
                cc.steps = Some(steps);
            }
            if let Some(lr) = a.learning_rate {
                cc.learning_rate = lr;
            }
            if let Some(w) = a.warmup_proportion {
                cc.warmup_proportion = w;
            }
            if let Some(n) = a.eval_examples {
                cc.eval_examples = n;
            }
        }
        Command::Freq(a) => {
            set_list(&mut p.corpus, &a.corpus);
            set_list(&mut p.reference_corpus, &a.reference);
            if let Some(b) = &a.boundaries {
                c.analysis.boundaries = boundaries_from(b)?;
            }
        }
        Command::Anisotropy(a) => {
            set(&mut p.matrix, &a.matrix);
            set(&mut p.domain_vocab, &a.domain_vocab);
            set(&mut p.frequencies, &a.frequencies);
            if let Some(n) = a.pairs {
                c.analysis.pairs = n;
            }
            if let Some(b) = &a.boundaries {
                c.analysis.boundaries = boundaries_from(b)?;
            }
        }
    }
    Ok(())
}

pub(super) fn needs(command: &Command, c: &RunConfig) -> Vec<Need> {
    let p = &c.paths;
    match command {
        Command::TrainVocab(_) => vec![Need::Corpus],
        Command::Scan(_) => {
            let targets = if p.targets.is_some() {
                Need::Targets
            } else {
                Need::BaseVocab
            };
            vec![Need::Corpus, Need::DomainVocab, targets]
        }
        Command::Diff(_) => vec![Need::DomainVocab, Need::BaseVocab],
        Command::Requests(_) => vec![Need::DomainVocab, Need::BaseVocab, Need::Hits],
        Command::BuildMatrix(_) => {
            let mut n = match c.transfer.mode {
                InitMode::Scratch => vec![Need::DomainVocab, Need::BaseMatrix],
                InitMode::Continued => vec![Need::BaseVocab, Need::BaseMatrix],
                InitMode::Averaged => vec![Need::DomainVocab, Need::BaseVocab, Need::BaseMatrix],
                InitMode::Contextualized => vec![
                    Need::DomainVocab,
                    Need::BaseVocab,
                    Need::BaseMatrix,
                    Need::Hits,
                ],
            };
            if p.context_vectors.is_some() {
                n.extend([Need::ContextVectors, Need::Requests]);
            }
            n
        }
        Command::Collate(_) => vec![Need::Corpus, Need::DomainVocab],
        Command::Schedule(a) if a.difficulty => vec![Need::Corpus, Need::DomainVocab],
        Command::Schedule(_) => vec![],
        Command::Freq(_) if !p.reference_corpus.is_empty() => {
            vec![Need::Corpus, Need::ReferenceCorpus]
        }
        Command::Freq(_) => vec![Need::Corpus],
        Command::Anisotropy(_) => {
            let mut n = vec![Need::Matrix];
            if p.domain_vocab.is_some() || p.frequencies.is_some() {
                n.extend([Need::DomainVocab, Need::Frequencies]);
            }
            n
        }
    }
}

fn load_vocab(c: &RunConfig, need: Need) -> Result<Vocab> {
    Vocab::load(c.path(need), c.tokenizer.clone())
}

pub(super) fn dispatch(
    command: &Command,
    c: &RunConfig,
    out: &Path,
    repro: &Reproducibility,
) -> Result<Outcome> {
    match command {
        Command::TrainVocab(_) => train(c, out),
        Command::Scan(_) => scan(c, out),
        Command::Diff(_) => diff(c, out),
        Command::Requests(_) => requests(c, out),
        Command::BuildMatrix(_) => build_matrix(c, out, repro),
        Command::Collate(_) => collate(c, out),
        Command::Schedule(a) => schedule(c, out, a.difficulty),
        Command::Freq(_) => freq(c, out),
        Command::Anisotropy(_) => measure_anisotropy(c, out),
    }
}

fn train(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let corpus = c.corpus()?;
    let config = TrainerConfig {
        target_size: c.vocab.target_size,
        options: c.tokenizer.clone(),
        workers: c.workers,
    };
    let vocab = train_vocab(&corpus, &config)?;
    let path = out.join("vocab.txt");
    vocab.save(&path)?;
    Ok(Outcome {
        artifacts: vec![path],
        summary: json!({ "size": vocab.len(), "fingerprint": vocab.fingerprint() }),
    })
}

fn read_targets(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn scan(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let corpus = c.corpus()?;
    let domain = load_vocab(c, Need::DomainVocab)?;
    let targets = match &c.paths.targets {
        Some(p) => read_targets(p)?,
        None => {
            let base = load_vocab(c, Need::BaseVocab)?;
            let mapping = diff_vocab(&domain, &base)?;
            mapping
                .new
                .iter()
                .map(|&id| domain.tokens()[id as usize].clone())
                .collect()
        }
    };
    let result = scan_for_tokens(&corpus, &targets, &domain, &c.scan_options())?;
    let path = out.join("hits.jsonl");
    write_hits(&result, &path)?;
    let occurrences: usize = result.tokens.values().map(|t| t.occurrences()).sum();
    Ok(Outcome {
        artifacts: vec![path.clone(), targets_sidecar(&path)],
        summary: json!({
            "targets": result.tokens.len(),
            "occurrences": occurrences,
            "unfound_fraction": result.unfound_fraction(),
        }),
    })
}

fn diff(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let domain = load_vocab(c, Need::DomainVocab)?;
    let base = load_vocab(c, Need::BaseVocab)?;
    let mapping = diff_vocab(&domain, &base)?;
    let tsv = out.join("mapping.tsv");
    mapping.write_tsv(&domain, &tsv)?;
    let new_path = out.join("new_tokens.txt");
    let mut text = String::new();
    for &id in &mapping.new {
        text.push_str(&domain.tokens()[id as usize]);
        text.push('\n');
    }
    fs::write(&new_path, text).map_err(|e| Error::io(&new_path, e))?;
    Ok(Outcome {
        artifacts: vec![tsv, new_path],
        summary: json!({
            "domain_size": domain.len(),
            "shared": mapping.shared.len(),
            "new": mapping.new.len(),
            "coverage_ratio": mapping.coverage_ratio(),
        }),
    })
}

fn requests(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let domain = load_vocab(c, Need::DomainVocab)?;
    let base = load_vocab(c, Need::BaseVocab)?;
    let mapping = diff_vocab(&domain, &base)?;
    let hits = read_hits(c.path(Need::Hits))?;
    let reqs = plan_requests(&domain, &base, &mapping, &hits)?;
    let path = out.join("requests.jsonl");
    write_requests(&reqs, &path)?;
    Ok(Outcome {
        artifacts: vec![path],
        summary: json!({ "requests": reqs.len() }),
    })
}

fn build_matrix(c: &RunConfig, out: &Path, repro: &Reproducibility) -> Result<Outcome> {
    let mode = c.transfer.mode;
    let table = EmbeddingMatrix::import(c.path(Need::BaseMatrix))?;
    let mut warnings = Vec::new();

    let base = match mode {
        InitMode::Scratch => None,
        _ => Some(load_vocab(c, Need::BaseVocab)?),
    };
    if let Some(b) = &base {
        if table.len() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "base matrix has {} rows for a base vocabulary of {}",
                table.len(),
                b.len()
            )));
        }
    }
    let domain = match mode {
        InitMode::Continued => base.clone().expect("loaded"),
        _ => load_vocab(c, Need::DomainVocab)?,
    };
    let base = base.unwrap_or_else(|| domain.clone());
    let mapping = diff_vocab(&domain, &base)?;
    let hits = match mode {
        InitMode::Contextualized => Some(read_hits(c.path(Need::Hits))?),
        _ => None,
    };

    let statics = StaticProvider::new(table);
    let provider: Box<dyn EmbeddingProvider> = match &c.paths.context_vectors {
        Some(cv) => {
            let reqs = read_requests(c.path(Need::Requests))?;
            let store = read_context_vectors(cv, &reqs, statics.dim())?;
            Box::new(StoredProvider::new(statics, store)?)
        }
        None => {
            if mode == InitMode::Contextualized {
                warnings.push(
                    "no context vectors supplied; contextual vectors are the static rows"
                        .to_string(),
                );
            }
            Box::new(statics)
        }
    };
    let inputs = TransferInputs {
        domain: &domain,
        base: &base,
        mapping: &mapping,
        provider: provider.as_ref(),
    };
    let (matrix, report): (EmbeddingMatrix, BuildReport) =
        build_embedding_matrix(mode, &inputs, hits.as_ref(), c.seed, &c.build_options())?;
    warnings.extend(report.warnings.iter().cloned());
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let path = out.join("embeddings.bin");
    matrix.export(&path)?;
    let mut manifest =
        MatrixManifest::describe(&matrix, domain.fingerprint(), mode.as_str(), c.seed);
    manifest.config_hash = Some(repro.config_hash.clone());
    manifest.write(&path)?;
    let report_path = out.join("build_report.json");
    let report_json = json!({
        "undistillable": report.undistillable,
        "without_context": report.without_context,
        "warnings": warnings,
    });
    fs::write(
        &report_path,
        serde_json::to_string_pretty(&report_json).unwrap() + "\n",
    )
    .map_err(|e| Error::io(&report_path, e))?;
    Ok(Outcome {
        artifacts: vec![
            path.clone(),
            MatrixManifest::sidecar_path(&path),
            report_path,
        ],
        summary: json!({
            "mode": mode.as_str(),
            "rows": matrix.len(),
            "dim": matrix.dim(),
            "provenance": manifest.provenance_counts,
        }),
    })
}

fn collate(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let corpus = c.corpus()?;
    let vocab = load_vocab(c, Need::DomainVocab)?;
    let config = c.masking_config();
    let sequences = pack_sequences(
        &corpus,
        &vocab,
        c.masking.max_len,
        c.scan.segmenter,
        c.workers,
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let examples = pool.install(|| {
        sequences
            .par_iter()
            .enumerate()
            .map(|(i, s)| build_example(s, &vocab, &config, example_seed(c.seed, i)))
            .collect::<Result<Vec<_>>>()
    })?;
    let seq_path = out.join("sequences.bin");
    write_sequences(&sequences, &seq_path)?;
    let jsonl = out.join("examples.jsonl");
    write_examples_jsonl(&examples, &jsonl)?;
    let bin = out.join("examples.bin");
    write_examples_binary(&examples, &bin)?;
    let selected: usize = examples.iter().map(|e| e.selected.len()).sum();
    let no_eligible = examples.iter().filter(|e| e.no_eligible).count();
    if no_eligible > 0 {
        eprintln!("warning: {no_eligible} sequences had no eligible position");
    }
    Ok(Outcome {
        artifacts: vec![seq_path, jsonl, bin],
        summary: json!({
            "masking": config.to_string(),
            "sequences": sequences.len(),
            "selected_positions": selected,
            "no_eligible": no_eligible,
        }),
    })
}

fn schedule(c: &RunConfig, out: &Path, difficulty: bool) -> Result<Outcome> {
    let phases = c.phases();
    let path = out.join("schedule.csv");
    let rows = emit_schedule(&phases, &c.lr_plan(), &path)?;
    let mut artifacts = vec![path];
    let mut summary = json!({
        "steps": rows.len(),
        "phases": phases.iter().map(|p| json!({
            "version": p.version.as_str(),
            "steps": p.steps,
            "masking": p.masking.to_string(),
        })).collect::<Vec<_>>(),
    });
    if difficulty {
        let corpus = c.corpus()?;
        let vocab = load_vocab(c, Need::DomainVocab)?;
        let sequences = pack_sequences(
            &corpus,
            &vocab,
            c.masking.max_len,
            c.scan.segmenter,
            c.workers,
        )?;
        // every tenth sequence is held out for evaluation
        let (eval, train): (Vec<_>, Vec<_>) = sequences
            .iter()
            .cloned()
            .enumerate()
            .partition(|(i, _)| i % 10 == 9);
        let strip = |v: Vec<(usize, Vec<u32>)>| v.into_iter().map(|(_, s)| s).collect::<Vec<_>>();
        let (mut eval, train) = (strip(eval), strip(train));
        if eval.is_empty() {
            eval = sequences.clone();
        }
        let predictor = BackoffBigramPredictor::train(&train, vocab.len(), vocab.specials().mask)?;
        let ranking = difficulty_rank(
            &predictor,
            &eval,
            &vocab,
            &phase_configs(),
            c.seed,
            c.curriculum.eval_examples,
        )?;
        let dpath = out.join("difficulty.tsv");
        write_difficulty_tsv(&ranking, &dpath)?;
        artifacts.push(dpath);
        summary["difficulty"] = json!(ranking
            .iter()
            .map(|e| json!({ "phase": e.label, "rank": e.rank, "perplexity": e.perplexity }))
            .collect::<Vec<_>>());
    }
    Ok(Outcome { artifacts, summary })
}

fn histogram_tsv(table: &FrequencyTable, b: Boundaries) -> String {
    let h = bucket_frequencies(table, b);
    let mut s = String::from("category\trange\twords\n");
    for (i, name) in CATEGORY_NAMES.iter().enumerate() {
        s.push_str(&format!(
            "{}\t{}\t{}\n",
            name,
            b.range_label(i),
            h.counts[i]
        ));
    }
    s
}

fn freq(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let b = c.analysis.boundaries;
    let table = count_frequencies(&c.corpus()?, c.workers)?;
    let fpath = out.join("frequencies.tsv");
    table.write_tsv(&fpath)?;
    let hpath = out.join("histogram.tsv");
    fs::write(&hpath, histogram_tsv(&table, b)).map_err(|e| Error::io(&hpath, e))?;
    let mut artifacts = vec![fpath, hpath];
    let mut summary = json!({
        "tokens": table.total(),
        "distinct": table.distinct(),
        "histogram": bucket_frequencies(&table, b).counts,
    });
    if !c.paths.reference_corpus.is_empty() {
        let reference = count_frequencies(&c.reference_corpus()?, c.workers)?;
        let rpath = out.join("reference_frequencies.tsv");
        reference.write_tsv(&rpath)?;
        let cmp = compare_corpora(&table, &reference, b);
        let cpath = out.join("comparison.tsv");
        cmp.write("corpus", "reference", &cpath)?;
        artifacts.extend([rpath, cpath.clone(), cpath.with_extension("json")]);
        summary["comparison"] =
            serde_json::to_value(&cmp).map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(Outcome { artifacts, summary })
}

fn measure_anisotropy(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let matrix = EmbeddingMatrix::import(c.path(Need::Matrix))?;
    let rows: Vec<&[f32]> = matrix.rows().collect();
    let total_pairs = rows.len() as u64 * (rows.len() as u64).saturating_sub(1) / 2;
    let value = anisotropy(&rows, c.analysis.pairs, c.seed)?;
    let exact = c.analysis.pairs as u64 >= total_pairs;
    let apath = out.join("anisotropy.json");
    let report = json!({
        "rows": matrix.len(),
        "dim": matrix.dim(),
        "pairs": total_pairs.min(c.analysis.pairs as u64),
        "exact": exact,
        "anisotropy": value,
    });
    fs::write(
        &apath,
        serde_json::to_string_pretty(&report).unwrap() + "\n",
    )
    .map_err(|e| Error::io(&apath, e))?;
    let mut artifacts = vec![apath];
    if c.paths.domain_vocab.is_some() {
        let vocab = load_vocab(c, Need::DomainVocab)?;
        let table = FrequencyTable::read_tsv(c.path(Need::Frequencies))?;
        let spath = out.join("stratified.tsv");
        export_freq_stratified(&matrix, &table, &vocab, c.analysis.boundaries, &spath)?;
        artifacts.push(spath);
    }
    Ok(Outcome {
        artifacts,
        summary: report,
    })
}
