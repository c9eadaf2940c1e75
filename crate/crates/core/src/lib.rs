//! Tooling for adapting a BERT-style masked language model to a new domain.
//!
//! The crate covers the data side of domain adaptation:
//!
//! - [`wordpiece`]: WordPiece vocabulary training, encoding and word grouping.
//! - [`corpus`]: parallel corpus scanning, word frequencies and uniform
//!   sampling of the sentences a token occurs in.
//! - [`transfer`]: building the embedding matrix of a domain vocabulary from
//!   a base model, by copying shared rows and synthesizing new ones from
//!   subtoken means and in-context representations.
//! - [`masking`]: MLM example construction (token or whole-word selection,
//!   80-10-10 or mask-only corruption).
//! - [`curriculum`]: the four-phase masking curriculum, its learning-rate
//!   plan and pseudo-perplexity based difficulty ranking.
//! - [`analysis`]: frequency histograms, corpus comparison and anisotropy.
//! - [`cli`]: the `lmprep` command line pipeline.
//!
//! Every capability has a runnable program under `examples/`.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod curriculum;
mod error;
pub mod masking;
pub mod numeric;
pub mod seed;
pub mod transfer;
pub mod wordpiece;

pub use error::{Error, Result};
