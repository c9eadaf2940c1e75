use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LMPREMB\0";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 4;

/// How a row of the embedding matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Provenance {
    Copied = 0,
    Distilled = 1,
    Contextualized = 2,
    Random = 3,
}

impl Provenance {
    pub const ALL: [Provenance; 4] = [
        Provenance::Copied,
        Provenance::Distilled,
        Provenance::Contextualized,
        Provenance::Random,
    ];

    fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.get(b as usize).copied()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Copied => "copied",
            Provenance::Distilled => "distilled",
            Provenance::Contextualized => "contextualized",
            Provenance::Random => "random",
        }
    }
}

/// Row-major `|V| x d` matrix of f32 token vectors with one provenance tag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
    provenance: Vec<Provenance>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(rows * dim),
            provenance: Vec::with_capacity(rows),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn push_row(&mut self, row: &[f32], provenance: Provenance) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: row.len(),
            });
        }
        if let Some(i) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "row {} has a non-finite value at column {i}",
                self.len()
            )));
        }
        self.data.extend_from_slice(row);
        self.provenance.push(provenance);
        Ok(())
    }

    pub fn row(&self, i: usize) -> Option<&[f32]> {
        (i < self.len()).then(|| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        // chunks_exact panics on 0
        self.data.chunks_exact(self.dim.max(1)).take(self.len())
    }

    pub fn provenance(&self, i: usize) -> Option<Provenance> {
        self.provenance.get(i).copied()
    }

    pub fn provenances(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.iter().filter(|&&x| x == p).count()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Serialized bytes: header, row-major little-endian f32, provenance bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4 + self.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend(self.provenance.iter().map(|&p| p as u8));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::MatrixFormat(m.to_string());
        if bytes.len() < HEADER_LEN {
            return Err(bad("truncated header"));
        }
        if &bytes[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::MatrixFormat(format!(
                "unsupported version {version}"
            )));
        }
        let rows = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let dim = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
        let rows = usize::try_from(rows).map_err(|_| bad("row count overflows"))?;
        let floats = rows.checked_mul(dim).ok_or_else(|| bad("size overflows"))?;
        let expected = floats
            .checked_mul(4)
            .and_then(|n| n.checked_add(rows))
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or_else(|| bad("size overflows"))?;
        if bytes.len() < expected {
            return Err(Error::MatrixFormat(format!(
                "truncated: {rows}x{dim} matrix needs {expected} bytes, file has {}",
                bytes.len()
            )));
        }
        if bytes.len() > expected {
            return Err(Error::MatrixFormat(format!(
                "{} trailing bytes after {rows}x{dim} matrix",
                bytes.len() - expected
            )));
        }
        let body = &bytes[HEADER_LEN..HEADER_LEN + floats * 4];
        let mut data = Vec::with_capacity(floats);
        for (i, c) in body.chunks_exact(4).enumerate() {
            let x = f32::from_le_bytes(c.try_into().unwrap());
            if !x.is_finite() {
                return Err(Error::MatrixFormat(format!(
                    "non-finite value at row {}, column {}",
                    i / dim.max(1),
                    i % dim.max(1)
                )));
            }
            data.push(x);
        }
        let provenance = bytes[HEADER_LEN + floats * 4..]
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                Provenance::from_byte(b).ok_or_else(|| {
                    Error::MatrixFormat(format!("bad provenance byte {b} at row {i}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            data,
            provenance,
        })
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn import(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// JSON sidecar written next to a matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixManifest {
    pub format_version: u32,
    pub rows: usize,
    pub dim: usize,
    /// Fingerprint of the vocabulary the rows are indexed by.
    pub vocab_hash: String,
    pub mode: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub provenance_counts: std::collections::BTreeMap<String, usize>,
}

impl MatrixManifest {
    pub fn describe(matrix: &EmbeddingMatrix, vocab_hash: String, mode: &str, seed: u64) -> Self {
        let provenance_counts = Provenance::ALL
            .iter()
            .map(|p| (p.as_str().to_string(), matrix.count(*p)))
            .collect();
        Self {
            format_version: VERSION,
            rows: matrix.len(),
            dim: matrix.dim(),
            vocab_hash,
            mode: mode.to_string(),
            seed,
            config_hash: None,
            provenance_counts,
        }
    }

    pub fn sidecar_path(matrix_path: &Path) -> PathBuf {
        let mut s = matrix_path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    pub fn write(&self, matrix_path: &Path) -> Result<()> {
        let path = Self::sidecar_path(matrix_path);
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn read(matrix_path: &Path) -> Result<Self> {
        let path = Self::sidecar_path(matrix_path);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, dim: usize) -> EmbeddingMatrix {
        let mut m = EmbeddingMatrix::new(dim);
        for r in 0..rows {
            let row: Vec<f32> = (0..dim)
                .map(|c| (r * dim + c) as f32 * 0.25 - 3.0)
                .collect();
            m.push_row(&row, Provenance::ALL[r % 4]).unwrap();
        }
        m
    }

    #[test]
    fn round_trip_10x8() {
        let m = sample(10, 8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emb");
        m.export(&path).unwrap();
        assert_eq!(EmbeddingMatrix::import(&path).unwrap(), m);
    }

    #[test]
    fn corrupt_header_rejected() {
        let mut bytes = sample(2, 3).to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&bytes),
            Err(Error::MatrixFormat(_))
        ));
        assert!(EmbeddingMatrix::from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn truncation_and_trailing_bytes_rejected() {
        let bytes = sample(3, 4).to_bytes();
        let err = EmbeddingMatrix::from_bytes(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(EmbeddingMatrix::from_bytes(&longer).is_err());
    }

    #[test]
    fn bad_provenance_rejected() {
        let mut bytes = sample(2, 2).to_bytes();
        let n = bytes.len();
        bytes[n - 1] = 9;
        assert!(EmbeddingMatrix::from_bytes(&bytes).is_err());
    }

    #[test]
    fn push_row_checks_dimension_and_finiteness() {
        let mut m = EmbeddingMatrix::new(3);
        assert!(matches!(
            m.push_row(&[1.0, 2.0], Provenance::Copied),
            Err(Error::Dimension { .. })
        ));
        assert!(m
            .push_row(&[1.0, f32::NAN, 0.0], Provenance::Copied)
            .is_err());
        assert!(m.is_empty());
    }

    #[test]
    fn manifest_round_trip() {
        let m = sample(4, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emb");
        let manifest = MatrixManifest::describe(&m, "abc".into(), "averaged", 7);
        manifest.write(&path).unwrap();
        assert_eq!(MatrixManifest::read(&path).unwrap(), manifest);
        assert_eq!(manifest.provenance_counts["copied"], 1);
    }
}
