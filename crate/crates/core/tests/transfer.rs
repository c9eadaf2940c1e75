mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::{assert_close, golden, read_json, vocab_from_json, SplitMix};
use lmprep::corpus::{HitSource, ScanResult, SentenceHit, Span, TokenHits};
use lmprep::transfer::exchange::{
    answer_requests, plan_requests, read_context_vectors, read_requests, write_requests,
    StoredProvider,
};
use lmprep::transfer::{
    build_embedding_matrix, diff_vocab, BuildOptions, Distiller, EmbeddingMatrix,
    EmbeddingProvider, InitMode, MatrixManifest, Provenance, StaticProvider, SyntheticProvider,
    TransferInputs,
};
use lmprep::wordpiece::{TokenId, Vocab};
use lmprep::Result;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// The stand-in encoder of `tests/oracles/transfer.py`.
struct FormulaProvider {
    table: EmbeddingMatrix,
}

impl FormulaProvider {
    fn from_fixture(f: &Value) -> Self {
        let rows: Vec<Vec<f32>> = serde_json::from_value(f["static"].clone()).unwrap();
        let mut table = EmbeddingMatrix::new(rows[0].len());
        for r in &rows {
            table.push_row(r, Provenance::Copied).unwrap();
        }
        Self { table }
    }
}

impl EmbeddingProvider for FormulaProvider {
    fn dim(&self) -> usize {
        self.table.dim()
    }

    fn static_vector(&self, id: TokenId) -> Result<Vec<f32>> {
        Ok(self.table.row(id as usize).unwrap().to_vec())
    }

    fn contextual_vectors(&self, s: &[TokenId], span: Span) -> Result<Vec<Vec<f32>>> {
        Ok(span
            .range()
            .map(|p| {
                let own = self.table.row(s[p] as usize).unwrap();
                (0..self.dim())
                    .map(|j| {
                        let prev = if p > 0 {
                            0.5 * self.table.row(s[p - 1] as usize).unwrap()[j] as f64
                        } else {
                            0.0
                        };
                        (own[j] as f64 + prev + 0.125 * p as f64 + 0.0625 * s.len() as f64) as f32
                    })
                    .collect()
            })
            .collect())
    }
}

fn hits_from(value: &Value) -> Vec<SentenceHit> {
    value
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let sentence: Vec<TokenId> = serde_json::from_value(h["sentence"].clone()).unwrap();
            let spans: Vec<[usize; 2]> = serde_json::from_value(h["spans"].clone()).unwrap();
            SentenceHit {
                sentence: Arc::from(sentence),
                spans: spans.iter().map(|s| Span::new(s[0], s[1])).collect(),
                source: HitSource {
                    shard: 0,
                    offset: i as u64,
                    sentence: 0,
                },
            }
        })
        .collect()
}

struct Setup {
    f: Value,
    base: Vocab,
    domain: Vocab,
    provider: FormulaProvider,
}

fn setup() -> Setup {
    let f = read_json("transfer_expected.json");
    Setup {
        base: vocab_from_json(&f["base"]),
        domain: vocab_from_json(&f["domain"]),
        provider: FormulaProvider::from_fixture(&f),
        f,
    }
}

fn floats(v: &Value) -> Vec<f64> {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn six_piece_mean_matches_script() {
    let s = setup();
    let d = Distiller::new(&s.domain, &s.base, &s.provider);
    let pieces: Vec<&str> = d
        .base_pieces("bronchoconstriction")
        .unwrap()
        .iter()
        .map(|&i| s.base.token(i).unwrap())
        .collect();
    let want: Vec<String> = serde_json::from_value(s.f["six_piece"]["pieces"].clone()).unwrap();
    assert_eq!(pieces, want);
    assert_close(
        &d.distill("bronchoconstriction").unwrap(),
        &floats(&s.f["six_piece"]["mean"]),
        1e-9,
    );
}

#[test]
fn two_hits_average_with_distilled() {
    let s = setup();
    let d = Distiller::new(&s.domain, &s.base, &s.provider);
    let hits = hits_from(&s.f["two_hits"]["hits"]);
    let got = d.contextualize("bronchoconstriction", &hits).unwrap();
    assert_close(&got, &floats(&s.f["two_hits"]["expected"]), 1e-9);
}

#[test]
fn no_hits_gives_distilled_exactly() {
    let s = setup();
    let d = Distiller::new(&s.domain, &s.base, &s.provider);
    for token in ["bronchoconstriction", "cytokine", "##osis"] {
        assert_eq!(
            d.contextualize(token, &[]).unwrap(),
            d.distill(token).unwrap()
        );
    }
}

#[test]
fn excluding_distilled_averages_occurrences_only() {
    let s = setup();
    let hits = hits_from(&s.f["two_hits"]["hits"]);
    let with = Distiller::new(&s.domain, &s.base, &s.provider);
    let without = Distiller::new(&s.domain, &s.base, &s.provider).include_distilled(false);
    let t_d = with.distill("bronchoconstriction").unwrap();
    let all = with.contextualize("bronchoconstriction", &hits).unwrap();
    let occ = without.contextualize("bronchoconstriction", &hits).unwrap();
    // (t_d + c1 + c2) / 3 == (t_d + 2 * mean(c)) / 3
    let recombined: Vec<f64> = t_d
        .iter()
        .zip(&occ)
        .map(|(t, c)| (t + 2.0 * c) / 3.0)
        .collect();
    assert_close(&all, &recombined, 1e-12);
}

fn scan_result(s: &Setup) -> ScanResult {
    let mut tokens = BTreeMap::new();
    for (token, hits) in s.f["build"]["hits"].as_object().unwrap() {
        let hits = hits_from(hits);
        tokens.insert(
            token.clone(),
            TokenHits {
                qualifying: hits.len() as u64,
                sample_size: hits.len(),
                hits,
            },
        );
    }
    ScanResult {
        shards: vec!["fixture".into()],
        tokens,
    }
}

#[test]
fn contextualized_build_matches_per_row_oracle() {
    let s = setup();
    let mapping = diff_vocab(&s.domain, &s.base).unwrap();
    let inputs = TransferInputs {
        domain: &s.domain,
        base: &s.base,
        mapping: &mapping,
        provider: &s.provider,
    };
    let hits = scan_result(&s);
    let (m, report) = build_embedding_matrix(
        InitMode::Contextualized,
        &inputs,
        Some(&hits),
        1,
        &BuildOptions::default(),
    )
    .unwrap();
    let rows: Vec<Vec<f64>> = serde_json::from_value(s.f["build"]["rows"].clone()).unwrap();
    let prov: Vec<String> = serde_json::from_value(s.f["build"]["provenance"].clone()).unwrap();
    assert_eq!(m.len(), 40);
    for (i, want) in rows.iter().enumerate() {
        assert_eq!(m.provenance(i).unwrap().as_str(), prov[i], "row {i}");
        let got: Vec<f64> = m.row(i).unwrap().iter().map(|&x| x as f64).collect();
        let narrowed: Vec<f64> = want.iter().map(|&x| x as f32 as f64).collect();
        assert_close(&got, &narrowed, 1e-6);
    }
    assert_eq!(
        report.without_context.len(),
        prov.iter().filter(|p| *p == "distilled").count()
    );
    assert!(report.undistillable.is_empty());
}

#[test]
fn shared_rows_are_bit_identical() {
    let s = setup();
    let mapping = diff_vocab(&s.domain, &s.base).unwrap();
    let inputs = TransferInputs {
        domain: &s.domain,
        base: &s.base,
        mapping: &mapping,
        provider: &s.provider,
    };
    let hits = scan_result(&s);
    for mode in [InitMode::Averaged, InitMode::Contextualized] {
        let (m, _) =
            build_embedding_matrix(mode, &inputs, Some(&hits), 3, &BuildOptions::default())
                .unwrap();
        for &(d, b) in &mapping.shared {
            let want = s.provider.static_vector(b).unwrap();
            let got = m.row(d as usize).unwrap();
            assert!(
                got.iter()
                    .zip(&want)
                    .all(|(x, y)| x.to_bits() == y.to_bits()),
                "{mode} row {d}"
            );
            assert_eq!(m.provenance(d as usize), Some(Provenance::Copied));
        }
    }
}

#[test]
fn continued_and_scratch_modes() {
    let s = setup();
    let mapping = diff_vocab(&s.domain, &s.base).unwrap();
    let inputs = TransferInputs {
        domain: &s.domain,
        base: &s.base,
        mapping: &mapping,
        provider: &s.provider,
    };
    let (m, _) = build_embedding_matrix(
        InitMode::Continued,
        &inputs,
        None,
        0,
        &BuildOptions::default(),
    )
    .unwrap();
    assert_eq!(m.len(), s.base.len());
    assert_eq!(m.count(Provenance::Copied), s.base.len());
    let (r, _) = build_embedding_matrix(
        InitMode::Scratch,
        &inputs,
        None,
        0,
        &BuildOptions::default(),
    )
    .unwrap();
    assert_eq!(r.len(), s.domain.len());
    assert_eq!(r.count(Provenance::Random), s.domain.len());
    let xs = r.as_slice();
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    assert!((sd - 0.02).abs() < 0.004, "σ {sd}");
}

#[test]
fn missing_hits_entry_is_an_error() {
    let s = setup();
    let mapping = diff_vocab(&s.domain, &s.base).unwrap();
    let inputs = TransferInputs {
        domain: &s.domain,
        base: &s.base,
        mapping: &mapping,
        provider: &s.provider,
    };
    let mut hits = scan_result(&s);
    hits.tokens.remove("cytokine");
    let err = build_embedding_matrix(
        InitMode::Contextualized,
        &inputs,
        Some(&hits),
        0,
        &BuildOptions::default(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("cytokine"), "{err}");
}

#[test]
fn mapping_matches_set_intersection() {
    let f = read_json("transfer_expected.json");
    let m = &f["mapping"];
    let domain = vocab_from_json(&m["domain"]);
    let base = vocab_from_json(&m["base"]);
    assert_eq!(domain.len(), 30);
    let mapping = diff_vocab(&domain, &base).unwrap();
    let shared: Vec<(TokenId, TokenId)> =
        serde_json::from_value::<Vec<[TokenId; 2]>>(m["shared"].clone())
            .unwrap()
            .into_iter()
            .map(|[a, b]| (a, b))
            .collect();
    let new: Vec<TokenId> = serde_json::from_value(m["new"].clone()).unwrap();
    assert_eq!(mapping.shared, shared);
    assert_eq!(mapping.new, new);
}

#[test]
fn context_free_provider_reduces_to_distillation() {
    let words: Vec<String> = (0..100).map(|i| format!("tok{i:03}")).collect();
    let mut base_tokens: Vec<String> = lmprep::wordpiece::SPECIAL_TOKENS
        .iter()
        .map(|s| s.to_string())
        .collect();
    base_tokens.extend(["t", "##o", "##k"].map(String::from));
    base_tokens.extend((0..10).map(|d| format!("##{d}")));
    let base = Vocab::from_tokens(base_tokens).unwrap();
    let mut domain_tokens: Vec<String> = lmprep::wordpiece::SPECIAL_TOKENS
        .iter()
        .map(|s| s.to_string())
        .collect();
    domain_tokens.extend(words.iter().cloned());
    let domain = Vocab::from_tokens(domain_tokens).unwrap();
    let provider = SyntheticProvider::context_free(16, 4);
    let d = Distiller::new(&domain, &base, &provider);
    let mut rng = SplitMix::new(1);
    for w in &words {
        let id = domain.id(w).unwrap();
        let others: Vec<TokenId> = (0..5).map(|_| 5 + rng.below(100) as TokenId).collect();
        let mut sentence = others.clone();
        sentence.insert(2, id);
        let hit = SentenceHit {
            sentence: Arc::from(sentence),
            spans: vec![Span::new(2, 3)],
            source: HitSource {
                shard: 0,
                offset: 0,
                sentence: 0,
            },
        };
        assert_close(
            &d.contextualize(w, &[hit]).unwrap(),
            &d.distill(w).unwrap(),
            1e-9,
        );
    }
}

#[test]
fn exchange_files_reproduce_in_process_build() {
    let s = setup();
    let mapping = diff_vocab(&s.domain, &s.base).unwrap();
    let hits = scan_result(&s);
    let dir = tempfile::tempdir().unwrap();
    let requests = plan_requests(&s.domain, &s.base, &mapping, &hits).unwrap();
    let req_path = dir.path().join("requests.jsonl");
    write_requests(&requests, &req_path).unwrap();
    let back = read_requests(&req_path).unwrap();
    assert_eq!(back, requests);
    let ctx_path = dir.path().join("context.bin");
    answer_requests(&back, &s.provider, &ctx_path).unwrap();
    let store = read_context_vectors(&ctx_path, &back, s.provider.dim()).unwrap();
    let stored = StoredProvider::new(StaticProvider::new(s.provider.table.clone()), store).unwrap();

    let run = |p: &dyn EmbeddingProvider| {
        let inputs = TransferInputs {
            domain: &s.domain,
            base: &s.base,
            mapping: &mapping,
            provider: p,
        };
        build_embedding_matrix(
            InitMode::Contextualized,
            &inputs,
            Some(&hits),
            0,
            &BuildOptions::default(),
        )
        .unwrap()
        .0
    };
    assert_eq!(run(&s.provider), run(&stored));
}

#[test]
fn full_size_matrix_round_trip_checksum() {
    let m = SyntheticProvider::new(768, 2024).static_table(30522);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("embeddings.bin");
    m.export(&path).unwrap();
    MatrixManifest::describe(&m, "synthetic".into(), "continued", 2024)
        .write(&path)
        .unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let back = EmbeddingMatrix::import(&path).unwrap();
    assert_eq!(back, m);
    let manifest = MatrixManifest::read(&path).unwrap();
    assert_eq!((manifest.rows, manifest.dim), (30522, 768));
    let line = format!(
        "{}  embeddings.bin ({} bytes, 30522x768)\n",
        hex::encode(Sha256::digest(&bytes)),
        bytes.len()
    );
    golden("matrix_30522x768.sha256", line.as_bytes());
}
