//! File protocol for computing contextual vectors with an encoder that runs
//! outside this process.
//!
//! 1. [`plan_requests`] lists every `(base sentence, span)` the contextual
//!    build needs; [`write_requests`] stores them as JSON lines.
//! 2. The external encoder answers with a binary vector file: header
//!    (`LMPRCTX\0`, version `u32`, record count `u64`, dim `u32`) then per
//!    record the request index `u64`, the vector count `u32` and that many
//!    `dim`-wide little-endian f32 vectors.
//! 3. [`read_context_vectors`] validates the answer against the requests and
//!    yields a [`StoredProvider`].

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ScanResult, Span};
use crate::error::{Error, Result};
use crate::wordpiece::{TokenId, Vocab};

use super::distill::align_sentence;
use super::mapping::TokenMapping;
use super::provider::{EmbeddingProvider, StaticProvider};

const MAGIC: &[u8; 8] = b"LMPRCTX\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRequest {
    pub index: usize,
    pub token: String,
    /// Base token ids including `[CLS]` and `[SEP]`.
    pub sentence: Vec<TokenId>,
    pub span: [usize; 2],
}

impl ContextRequest {
    pub fn span(&self) -> Span {
        Span::new(self.span[0], self.span[1])
    }
}

/// Requests for every occurrence of every new token, in domain id order.
pub fn plan_requests(
    domain: &Vocab,
    base: &Vocab,
    mapping: &TokenMapping,
    hits: &ScanResult,
) -> Result<Vec<ContextRequest>> {
    let mut requests = Vec::new();
    for &id in &mapping.new {
        let token = domain
            .token(id)
            .ok_or_else(|| Error::InvalidArgument(format!("id {id} outside domain vocabulary")))?;
        let Some(th) = hits.get(token) else { continue };
        for hit in &th.hits {
            let aligned = align_sentence(domain, base, &hit.sentence)?;
            for &span in &hit.spans {
                let base = aligned.base_span(span).ok_or_else(|| {
                    Error::InvalidArgument(format!("span {span:?} outside sentence"))
                })?;
                requests.push(ContextRequest {
                    index: requests.len(),
                    token: token.to_string(),
                    sentence: aligned.base_ids.clone(),
                    span: [base.start, base.end],
                });
            }
        }
    }
    Ok(requests)
}

pub fn write_requests(requests: &[ContextRequest], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in requests {
        let line = serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_requests(path: impl AsRef<Path>) -> Result<Vec<ContextRequest>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ContextRequest = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if r.index != out.len() {
            return Err(Error::Parse(format!(
                "{}:{}: request index {} out of sequence",
                path.display(),
                n + 1,
                r.index
            )));
        }
        out.push(r);
    }
    Ok(out)
}

/// Answers every request with `provider` and writes the vector file. This
/// is what an external encoder is expected to produce.
pub fn answer_requests<P: EmbeddingProvider + ?Sized>(
    requests: &[ContextRequest],
    provider: &P,
    path: impl AsRef<Path>,
) -> Result<()> {
    let answers = requests
        .iter()
        .map(|r| {
            provider
                .contextual_vectors(&r.sentence, r.span())
                .map(|v| (r.index as u64, v))
        })
        .collect::<Result<Vec<_>>>()?;
    write_context_vectors(&answers, provider.dim(), path)
}

pub fn write_context_vectors(
    answers: &[(u64, Vec<Vec<f32>>)],
    dim: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(answers.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    for (index, vectors) in answers {
        bytes.extend_from_slice(&index.to_le_bytes());
        bytes.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
        for v in vectors {
            if v.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: v.len(),
                });
            }
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| Error::ContextFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Stored contextual vectors keyed by `(base sentence, span)`.
#[derive(Debug, Clone, Default)]
pub struct ContextStore {
    dim: usize,
    entries: HashMap<(Vec<TokenId>, Span), Vec<Vec<f32>>>,
}

impl ContextStore {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, sentence: &[TokenId], span: Span) -> Option<&Vec<Vec<f32>>> {
        self.entries.get(&(sentence.to_vec(), span))
    }
}

/// Reads an encoder's answer file and checks it covers `requests` exactly
/// once each, with one `dim`-wide vector per span position.
pub fn read_context_vectors(
    path: impl AsRef<Path>,
    requests: &[ContextRequest],
    dim: usize,
) -> Result<ContextStore> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if c.take(8)? != MAGIC {
        return Err(Error::ContextFormat("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::ContextFormat(format!(
            "unsupported version {version}"
        )));
    }
    let count = c.u64()?;
    let file_dim = c.u32()? as usize;
    if file_dim != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: file_dim,
        });
    }
    if count != requests.len() as u64 {
        return Err(Error::ContextFormat(format!(
            "{count} records for {} requests",
            requests.len()
        )));
    }
    let mut answered = vec![false; requests.len()];
    let mut store = ContextStore {
        dim,
        entries: HashMap::new(),
    };
    for _ in 0..count {
        let index = c.u64()? as usize;
        let n = c.u32()? as usize;
        let request = requests
            .get(index)
            .ok_or_else(|| Error::ContextFormat(format!("record for unknown request {index}")))?;
        if std::mem::replace(&mut answered[index], true) {
            return Err(Error::ContextFormat(format!(
                "request {index} answered twice"
            )));
        }
        let span = request.span();
        if n != span.len() {
            return Err(Error::ContextFormat(format!(
                "request {index} spans {} positions but has {n} vectors",
                span.len()
            )));
        }
        let mut vectors = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = c.take(dim * 4)?;
            let v: Vec<f32> = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::ContextFormat(format!(
                    "non-finite value in request {index}"
                )));
            }
            vectors.push(v);
        }
        store
            .entries
            .insert((request.sentence.clone(), span), vectors);
    }
    if c.pos != bytes.len() {
        return Err(Error::ContextFormat(format!(
            "{} trailing bytes",
            bytes.len() - c.pos
        )));
    }
    Ok(store)
}

/// Static rows from a table, contextual vectors from an answered request file.
pub struct StoredProvider {
    statics: StaticProvider,
    store: ContextStore,
}

impl StoredProvider {
    pub fn new(statics: StaticProvider, store: ContextStore) -> Result<Self> {
        if statics.dim() != store.dim() && !store.is_empty() {
            return Err(Error::Dimension {
                expected: statics.dim(),
                found: store.dim(),
            });
        }
        Ok(Self { statics, store })
    }
}

impl EmbeddingProvider for StoredProvider {
    fn dim(&self) -> usize {
        self.statics.dim()
    }

    fn static_vector(&self, id: TokenId) -> Result<Vec<f32>> {
        self.statics.static_vector(id)
    }

    fn contextual_vectors(&self, sentence: &[TokenId], span: Span) -> Result<Vec<Vec<f32>>> {
        self.store.get(sentence, span).cloned().ok_or_else(|| {
            Error::Provider(format!(
                "no stored vectors for span {span:?} of a {}-token sentence",
                sentence.len()
            ))
        })
    }
}
