//! The `lmprep` command line: one subcommand per pipeline step, a shared
//! TOML config with flag overrides, and a `manifest.json` next to every set
//! of artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid configuration,
//! 3 runtime failure. Failures end with one JSON line on stderr.

mod commands;
mod config;
mod pack;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{
    corpus_from, AnalysisConfig, CurriculumConfig, MaskingSection, Need, PathsConfig, RunConfig,
    ScanConfig, TransferConfig, VocabConfig,
};
pub use pack::{pack_sequences, DEFAULT_MAX_LEN};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lmprep",
    version,
    about = "Vocabulary transfer and MLM data preparation for domain-adapted language models"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a WordPiece vocabulary on a corpus
    TrainVocab(commands::TrainVocabArgs),
    /// Sample context sentences for target tokens
    Scan(commands::ScanArgs),
    /// Split a domain vocabulary into shared and new tokens
    Diff(commands::DiffArgs),
    /// List the encoder requests a contextualized build needs
    Requests(commands::RequestsArgs),
    /// Build the input embedding matrix for a domain vocabulary
    BuildMatrix(commands::BuildMatrixArgs),
    /// Pack a corpus into sequences and MLM examples
    Collate(commands::CollateArgs),
    /// Emit the curriculum schedule, optionally ranking phase difficulty
    Schedule(commands::ScheduleArgs),
    /// Word frequencies, categories and corpus comparison
    Freq(commands::FreqArgs),
    /// Anisotropy of an embedding matrix and frequency-stratified export
    Anisotropy(commands::AnisotropyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::TrainVocab(_) => "train-vocab",
            Command::Scan(_) => "scan",
            Command::Diff(_) => "diff",
            Command::Requests(_) => "requests",
            Command::BuildMatrix(_) => "build-matrix",
            Command::Collate(_) => "collate",
            Command::Schedule(_) => "schedule",
            Command::Freq(_) => "freq",
            Command::Anisotropy(_) => "anisotropy",
        }
    }
}

/// Identifies the code, config and seed behind a set of artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reproducibility {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Serialize)]
struct Artifact {
    file: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    reproducibility: &'a Reproducibility,
    config: &'a RunConfig,
    artifacts: Vec<Artifact>,
    summary: serde_json::Value,
}

/// What a command produced: files under the output directory and a summary.
pub(crate) struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

fn write_manifest(
    out: &Path,
    repro: &Reproducibility,
    config: &RunConfig,
    outcome: &Outcome,
) -> Result<()> {
    let mut artifacts = Vec::new();
    for path in &outcome.artifacts {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let file = path
            .strip_prefix(out)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        artifacts.push(Artifact {
            file,
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let manifest = Manifest {
        reproducibility: repro,
        config,
        artifacts,
        summary: outcome.summary.clone(),
    };
    let path = out.join("manifest.json");
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn error_line(kind: &str, message: &str) -> String {
    let flat = message.split_whitespace().collect::<Vec<_>>().join(" ");
    serde_json::json!({ "error": kind, "message": flat }).to_string()
}

/// Resolves the effective config: file (or defaults), then common flags,
/// then the subcommand's own flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    if let Some(w) = cli.common.workers {
        config.workers = w;
    }
    commands::apply_overrides(&cli.command, &mut config)?;
    Ok(config)
}

/// Runs an already parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(repro) => {
            println!("{}", serde_json::to_string(&repro).expect("serializable"));
            EXIT_OK
        }
        Err(e) => {
            let kind = if matches!(e, Error::Config(_)) {
                "config"
            } else {
                "runtime"
            };
            eprintln!("{}", error_line(kind, &e.to_string()));
            exit_code(&e)
        }
    }
}

/// Runs the command and returns its reproducibility stanza.
pub fn execute(cli: &Cli) -> Result<Reproducibility> {
    let config = resolve_config(cli)?;
    config.validate(&commands::needs(&cli.command, &config))?;
    let out = &cli.common.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let repro = Reproducibility {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config_hash: config.hash(),
    };
    let outcome = commands::dispatch(&cli.command, &config, out, &repro)?;
    write_manifest(out, &repro, &config, &outcome)?;
    Ok(repro)
}

/// Parses `args` (including the program name) and runs them.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    let first = e.to_string();
                    let first = first
                        .lines()
                        .next()
                        .unwrap_or("usage error")
                        .trim_start_matches("error: ");
                    eprintln!("{}", error_line("usage", first));
                    EXIT_USAGE
                }
            }
        }
    }
}
