//! Shared test helpers. `SplitMix` and `zipf_documents` mirror
//! `tests/oracles/common.py` so oracle inputs can be rebuilt on both sides.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lmprep::wordpiece::{Vocab, SPECIAL_TOKENS};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_json(name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

/// Compares `bytes` with the frozen fixture `name`. With `LMPREP_BLESS=1`
/// the fixture is (re)written instead.
pub fn golden(name: &str, bytes: &[u8]) {
    let path = fixture(name);
    if std::env::var_os("LMPREP_BLESS").is_some() {
        std::fs::write(&path, bytes).unwrap();
        return;
    }
    let frozen = std::fs::read(&path)
        .unwrap_or_else(|e| panic!("missing golden {name} ({e}); run with LMPREP_BLESS=1"));
    if frozen != bytes {
        panic!(
            "{name} differs from its golden copy\n--- golden\n{}\n--- actual\n{}",
            String::from_utf8_lossy(&frozen),
            String::from_utf8_lossy(bytes)
        );
    }
}

pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn grid(&mut self) -> f32 {
        (self.below(2001) as i64 - 1000) as f32 / 512.0
    }
}

/// Documents of words `w<rank>` drawn from a rank^-1 law.
pub fn zipf_documents(
    seed: u64,
    vocab_size: usize,
    tokens: usize,
    doc_len: usize,
    offset: usize,
) -> Vec<String> {
    let mut rng = SplitMix::new(seed);
    let mut cum = Vec::with_capacity(vocab_size);
    let mut total = 0.0f64;
    for k in 1..=vocab_size {
        total += 1.0 / k as f64;
        cum.push(total);
    }
    let mut docs = Vec::new();
    let mut current: Vec<String> = Vec::with_capacity(doc_len);
    for _ in 0..tokens {
        let u = rng.unit() * total;
        let k = cum.partition_point(|&c| c <= u).min(vocab_size - 1);
        current.push(format!("w{}", k + 1 + offset));
        if current.len() == doc_len {
            docs.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        docs.push(current.join(" "));
    }
    docs
}

pub fn vocab(extra: &[&str]) -> Vocab {
    let mut t: Vec<&str> = SPECIAL_TOKENS.to_vec();
    t.extend(extra);
    Vocab::from_tokens(t).unwrap()
}

pub fn vocab_from_json(value: &serde_json::Value) -> Vocab {
    let tokens: Vec<String> = serde_json::from_value(value.clone()).unwrap();
    Vocab::from_tokens(tokens).unwrap()
}

pub fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
    assert_eq!(actual.len(), expected.len(), "length");
    for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
        assert!((a - e).abs() <= tol, "element {i}: {a} vs {e} (tol {tol})");
    }
}
