//! MLM examples as JSON lines or a packed little-endian binary, and plain
//! id sequences as length-prefixed arrays.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wordpiece::TokenId;

use super::{CorruptionAction, MlmExample};

const EXAMPLE_MAGIC: &[u8; 8] = b"LMPRMLM\0";
const SEQUENCE_MAGIC: &[u8; 8] = b"LMPRSEQ\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ExampleRecord {
    original: Vec<TokenId>,
    corrupted: Vec<TokenId>,
    labels: BTreeMap<usize, TokenId>,
    selected: Vec<usize>,
    actions: Vec<CorruptionAction>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    no_eligible: bool,
}

impl From<&MlmExample> for ExampleRecord {
    fn from(e: &MlmExample) -> Self {
        Self {
            original: e.original.clone(),
            corrupted: e.corrupted.clone(),
            labels: e.label_pairs().collect(),
            selected: e.selected.clone(),
            actions: e.actions.clone(),
            no_eligible: e.no_eligible,
        }
    }
}

fn to_example(r: ExampleRecord) -> Result<MlmExample> {
    let n = r.original.len();
    if r.corrupted.len() != n || r.actions.len() != r.selected.len() {
        return Err(Error::Parse("inconsistent example lengths".into()));
    }
    let mut labels = vec![None; n];
    for (&p, &id) in &r.labels {
        *labels
            .get_mut(p)
            .ok_or_else(|| Error::Parse(format!("label position {p} beyond length {n}")))? =
            Some(id);
    }
    if r.selected
        .iter()
        .any(|p| labels.get(*p).is_none_or(Option::is_none))
        || r.labels.len() != r.selected.len()
    {
        return Err(Error::Parse(
            "labels do not match selected positions".into(),
        ));
    }
    Ok(MlmExample {
        original: r.original,
        corrupted: r.corrupted,
        labels,
        selected: r.selected,
        actions: r.actions,
        no_eligible: r.no_eligible,
    })
}

pub fn write_examples_jsonl(examples: &[MlmExample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for e in examples {
        let line = serde_json::to_string(&ExampleRecord::from(e))
            .map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_examples_jsonl(path: impl AsRef<Path>) -> Result<Vec<MlmExample>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ExampleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(to_example(r)?);
    }
    Ok(out)
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn header(magic: &[u8; 8], count: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(magic);
    put_u32(&mut buf, VERSION);
    buf.extend_from_slice(&(count as u64).to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Parse(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn ids(&mut self, n: usize) -> Result<Vec<u32>> {
        (0..n).map(|_| self.u32()).collect()
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<usize> {
        if self.take(8)? != magic {
            return Err(Error::Parse("bad magic".into()));
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported version {version}")));
        }
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Parse(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Header (`LMPRMLM\0`, version, count), then per example: length `n`,
/// `n` original ids, `n` corrupted ids, a flags byte (bit 0: no eligible
/// position), selected count `k`, and `k` records of position `u32`,
/// label `u32`, action `u8`. All little-endian.
pub fn write_examples_binary(examples: &[MlmExample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = header(EXAMPLE_MAGIC, examples.len());
    for e in examples {
        put_u32(&mut buf, e.original.len() as u32);
        e.original.iter().for_each(|&id| put_u32(&mut buf, id));
        e.corrupted.iter().for_each(|&id| put_u32(&mut buf, id));
        buf.push(u8::from(e.no_eligible));
        put_u32(&mut buf, e.selected.len() as u32);
        for ((p, label), action) in e.label_pairs().zip(&e.actions) {
            put_u32(&mut buf, p as u32);
            put_u32(&mut buf, label);
            buf.push(*action as u8);
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_examples_binary(path: impl AsRef<Path>) -> Result<Vec<MlmExample>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };
    let count = r.header(EXAMPLE_MAGIC)?;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let n = r.u32()? as usize;
        let original = r.ids(n)?;
        let corrupted = r.ids(n)?;
        let flags = r.take(1)?[0];
        if flags > 1 {
            return Err(Error::Parse(format!("bad example flags {flags:#04x}")));
        }
        let k = r.u32()? as usize;
        let mut rec = ExampleRecord {
            original,
            corrupted,
            labels: BTreeMap::new(),
            selected: Vec::with_capacity(k),
            actions: Vec::with_capacity(k),
            no_eligible: flags == 1,
        };
        for _ in 0..k {
            let p = r.u32()? as usize;
            let label = r.u32()?;
            let action = CorruptionAction::from_byte(r.take(1)?[0])
                .ok_or_else(|| Error::Parse("bad corruption action byte".into()))?;
            rec.selected.push(p);
            rec.labels.insert(p, label);
            rec.actions.push(action);
        }
        out.push(to_example(rec)?);
    }
    r.finish()?;
    Ok(out)
}

/// Header (`LMPRSEQ\0`, version, count), then per sequence a `u32` length
/// and that many `u32` ids.
pub fn write_sequences(sequences: &[Vec<TokenId>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = header(SEQUENCE_MAGIC, sequences.len());
    for s in sequences {
        put_u32(&mut buf, s.len() as u32);
        s.iter().for_each(|&id| put_u32(&mut buf, id));
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_sequences(path: impl AsRef<Path>) -> Result<Vec<Vec<TokenId>>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };
    let count = r.header(SEQUENCE_MAGIC)?;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let n = r.u32()? as usize;
        out.push(r.ids(n)?);
    }
    r.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::{build_example, Corruption, MaskingConfig, MaskingStrategy};
    use crate::wordpiece::Vocab;

    fn examples() -> Vec<MlmExample> {
        let mut t: Vec<String> = crate::wordpiece::SPECIAL_TOKENS
            .iter()
            .map(|s| s.to_string())
            .collect();
        t.extend((0..30).map(|i| format!("w{i}")));
        let v = Vocab::from_tokens(t).unwrap();
        let cfg = MaskingConfig::new(MaskingStrategy::Token, 0.3, Corruption::EightyTenTen);
        (0..10)
            .map(|s| {
                let ids: Vec<u32> = (0..(5 + s as u32))
                    .map(|i| 5 + (i * 7 + s as u32) % 30)
                    .collect();
                build_example(&ids, &v, &cfg, s).unwrap()
            })
            .collect()
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ex.jsonl");
        let ex = examples();
        write_examples_jsonl(&ex, &p).unwrap();
        assert_eq!(read_examples_jsonl(&p).unwrap(), ex);
        let first = std::fs::read_to_string(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        assert!(v["labels"].is_object());
    }

    #[test]
    fn binary_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ex.bin");
        let ex = examples();
        write_examples_binary(&ex, &p).unwrap();
        assert_eq!(read_examples_binary(&p).unwrap(), ex);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 1]).unwrap();
        assert!(read_examples_binary(&p).is_err());
    }

    #[test]
    fn sequences_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("seq.bin");
        let seqs = vec![vec![2, 7, 9, 3], vec![], vec![2, 3]];
        write_sequences(&seqs, &p).unwrap();
        assert_eq!(read_sequences(&p).unwrap(), seqs);
    }
}
