//! Incremental byte-pair encoding.
//!
//! Everything needed to run a vocabulary-growth loop without the neural
//! model: a BPE learner whose tables nest by prefix (extending an inventory
//! replays the old table bit-for-bit and keeps learning), a loss-driven
//! schedule deciding *when* to grow, initialization strategies for embedding
//! rows added online (random control, component average, autoencoder
//! bottleneck), and the metrics used to study the result.
//!
//! The crate is organized by concern:
//!
//! - [`bpe`] — merge learning, segmentation with the `@@` convention, and
//!   the merges/vocab file formats.
//! - [`schedule`] — the per-epoch decision state machine and its trace,
//!   decision-log, and config formats.
//! - [`embed`] — the growable embedding matrix, output-layer growth, the
//!   autoencoder, and the embedding/checkpoint formats.
//! - [`metrics`] — unigram F1 and the analysis quantities built on it.

pub mod bpe;
pub mod embed;
pub mod error;
pub mod metrics;
pub mod schedule;

pub use bpe::{
    apply_to_corpus, count_pairs, detokenize_corpus, detokenize_sentence, diff_inventory,
    extend_merges, learn_merges, segment_word, symbol_inventory, InventoryDelta, MergeOp,
    MergeTable, SegmentedCorpus, SegmentedWord, WordFrequencyMap, MARKER,
};
pub use embed::{
    extend_matrix, extend_output_params, init_avg, init_random, train_autoencoder, Autoencoder,
    AutoencoderConfig, EmbedInitializer, EmbeddingMatrix, InitStrategy, OutputLayerParams,
    ReconstructionLoss, DEFAULT_RAND_SCALE,
};
pub use error::{Error, Result};
pub use metrics::{
    inventory_usage, length_norm_score, new_vocab_f1, rare_word_f1, subwords_per_word,
    unigram_f1, unigram_f1_corpus, unique_symbols, InventoryUsageReport, RareWordBuckets,
    SubwordStats, UnigramF1Report,
};
pub use schedule::{replay, ScheduleConfig, ScheduleDecision, ScheduleState};
