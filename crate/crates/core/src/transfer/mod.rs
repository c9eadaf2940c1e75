//! Embedding matrix construction for a domain vocabulary.
//!
//! Shared tokens copy the base model's rows. New tokens get the mean of
//! their base subtoken vectors ("distilled"), optionally averaged with their
//! last-layer representations in sampled corpus sentences
//! ("contextualized"). The base model is reached only through
//! [`EmbeddingProvider`].

mod build;
mod distill;
pub mod exchange;
mod mapping;
mod matrix;
mod provider;

pub use build::{build_embedding_matrix, BuildOptions, BuildReport, InitMode, TransferInputs};
pub use distill::{align_sentence, AlignedSentence, Distiller};
pub use mapping::{diff_vocab, TokenMapping};
pub use matrix::{EmbeddingMatrix, MatrixManifest, Provenance};
pub use provider::{EmbeddingProvider, StaticProvider, SyntheticProvider};
