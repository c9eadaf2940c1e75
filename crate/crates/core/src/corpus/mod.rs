//! Parallel corpus scanning: sentence segmentation, word frequencies and
//! uniform sampling of sentences that contain tokens of interest.

mod frequency;
mod reservoir;
mod scan;
mod segment;
mod source;

pub use frequency::{count_frequencies, normalize_word, FrequencyTable};
pub use reservoir::Reservoir;
pub use scan::{
    read_hits, sample_context_count, scan_for_tokens, targets_sidecar, write_hits, ContextCount,
    HitSource, ScanOptions, ScanResult, SentenceHit, Span, TokenHits, CONTEXT_COUNT_MAX,
    CONTEXT_COUNT_MIN,
};
pub use segment::{segment_sentences, Segmenter};
pub use source::{Chunk, CorpusSource, Shard};
