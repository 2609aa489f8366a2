//! Evaluation and analysis quantities: clipped unigram F1, rare-word and
//! new-vocabulary restrictions of it, inventory-usage fractions across an
//! increment, subwords-per-word statistics, and the length-normalized decode
//! score.
//!
//! Everything here is a pure function; corpus-level figures are
//! micro-averaged (clipped matches and token totals are summed per sentence
//! pair before dividing).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::bpe::{strip_marker, WordFrequencyMap, MARKER};
use crate::error::{Error, Result};

/// Clipped unigram precision/recall/F1 and the token totals they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnigramF1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_hyp_tokens: u64,
    pub n_ref_tokens: u64,
}

impl UnigramF1Report {
    fn from_counts(matches: u64, n_hyp: u64, n_ref: u64) -> Self {
        let precision = if n_hyp > 0 {
            matches as f64 / n_hyp as f64
        } else {
            0.0
        };
        let recall = if n_ref > 0 {
            matches as f64 / n_ref as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        UnigramF1Report {
            precision,
            recall,
            f1,
            n_hyp_tokens: n_hyp,
            n_ref_tokens: n_ref,
        }
    }
}

/// Per-type clipped match count between two token sequences.
fn clipped_matches<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> u64 {
    let mut ref_counts: HashMap<&str, u64> = HashMap::new();
    for token in reference {
        *ref_counts.entry(token.as_ref()).or_insert(0) += 1;
    }
    let mut hyp_counts: HashMap<&str, u64> = HashMap::new();
    for token in hyp {
        *hyp_counts.entry(token.as_ref()).or_insert(0) += 1;
    }
    hyp_counts
        .into_iter()
        .map(|(token, count)| count.min(ref_counts.get(token).copied().unwrap_or(0)))
        .sum()
}

/// Unigram F1 of one hypothesis/reference pair: precision is the clipped
/// match count over the hypothesis length, recall over the reference length.
/// Degenerate inputs yield zeros rather than errors.
pub fn unigram_f1<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> UnigramF1Report {
    let matches = clipped_matches(hyp, reference);
    UnigramF1Report::from_counts(matches, hyp.len() as u64, reference.len() as u64)
}

fn check_aligned<T, U>(hyp: &[T], reference: &[U]) -> Result<()> {
    if hyp.len() != reference.len() {
        return Err(Error::InvalidInput(format!(
            "corpora are not aligned: {} hypothesis sentences vs {} reference sentences",
            hyp.len(),
            reference.len()
        )));
    }
    Ok(())
}

/// Micro-averaged unigram F1 over sentence-aligned corpora.
pub fn unigram_f1_corpus<S: AsRef<str>>(
    hyp: &[Vec<S>],
    reference: &[Vec<S>],
) -> Result<UnigramF1Report> {
    check_aligned(hyp, reference)?;
    let mut matches = 0;
    let mut n_hyp = 0;
    let mut n_ref = 0;
    for (h, r) in hyp.iter().zip(reference) {
        matches += clipped_matches(h, r);
        n_hyp += h.len() as u64;
        n_ref += r.len() as u64;
    }
    Ok(UnigramF1Report::from_counts(matches, n_hyp, n_ref))
}

/// F1 per rare-word bucket: bucket `n` covers exactly the token positions
/// whose word occurs `n` times in the training counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareWordBuckets {
    pub buckets: BTreeMap<u64, UnigramF1Report>,
}

/// Computes clipped F1 restricted to each requested occurrence bucket.
/// Words absent from the training counts belong to no bucket.
pub fn rare_word_f1<S: AsRef<str>>(
    hyp: &[Vec<S>],
    reference: &[Vec<S>],
    train_counts: &WordFrequencyMap,
    buckets: &BTreeSet<u64>,
) -> Result<RareWordBuckets> {
    check_aligned(hyp, reference)?;
    let mut totals: BTreeMap<u64, (u64, u64, u64)> =
        buckets.iter().map(|&b| (b, (0, 0, 0))).collect();
    for (h, r) in hyp.iter().zip(reference) {
        for (&bucket, (matches, n_hyp, n_ref)) in totals.iter_mut() {
            let in_bucket = |t: &&S| train_counts.count(t.as_ref()) == Some(bucket);
            let h_f: Vec<&str> = h.iter().filter(in_bucket).map(AsRef::as_ref).collect();
            let r_f: Vec<&str> = r.iter().filter(in_bucket).map(AsRef::as_ref).collect();
            *matches += clipped_matches(&h_f, &r_f);
            *n_hyp += h_f.len() as u64;
            *n_ref += r_f.len() as u64;
        }
    }
    Ok(RareWordBuckets {
        buckets: totals
            .into_iter()
            .map(|(b, (m, nh, nr))| (b, UnigramF1Report::from_counts(m, nh, nr)))
            .collect(),
    })
}

/// Unigram F1 over segmented corpora restricted to tokens whose symbol (the
/// surface form without its continuation marker) is in `new_symbols`.
/// Equivalent to deleting every other token from both sides first.
pub fn new_vocab_f1<S: AsRef<str>>(
    hyp: &[Vec<S>],
    reference: &[Vec<S>],
    new_symbols: &BTreeSet<String>,
) -> Result<UnigramF1Report> {
    check_aligned(hyp, reference)?;
    let keep = |t: &&S| new_symbols.contains(strip_marker(t.as_ref()));
    let mut matches = 0;
    let mut n_hyp = 0;
    let mut n_ref = 0;
    for (h, r) in hyp.iter().zip(reference) {
        let h_f: Vec<&str> = h.iter().filter(keep).map(AsRef::as_ref).collect();
        let r_f: Vec<&str> = r.iter().filter(keep).map(AsRef::as_ref).collect();
        matches += clipped_matches(&h_f, &r_f);
        n_hyp += h_f.len() as u64;
        n_ref += r_f.len() as u64;
    }
    Ok(UnigramF1Report::from_counts(matches, n_hyp, n_ref))
}

/// Fractions describing how an increment changed which symbols the system
/// generates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryUsageReport {
    /// Share of previously generated types no longer generated afterwards.
    pub obsolete_fraction: f64,
    /// Share of generated-after types that belong to the old inventory yet do
    /// not appear in the re-segmented reference (subsumed but still used).
    pub subsumed_still_generated_fraction: f64,
    /// Set when `generated_before` was empty and the obsolete fraction is
    /// reported as zero by convention.
    pub degenerate_before: bool,
    /// Optional per-increment new-vocabulary F1 history, filled by callers
    /// tracking a whole run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub new_vocab_f1_trajectory: Vec<UnigramF1Report>,
}

/// Compares the unique types generated before and after an increment.
/// All sets hold bare symbols (markers stripped). `old_inventory` must be a
/// subset of `new_inventory`.
pub fn inventory_usage(
    generated_before: &BTreeSet<String>,
    generated_after: &BTreeSet<String>,
    ref_after: &BTreeSet<String>,
    old_inventory: &BTreeSet<String>,
    new_inventory: &BTreeSet<String>,
) -> Result<InventoryUsageReport> {
    if !old_inventory.is_subset(new_inventory) {
        return Err(Error::InvalidInput(
            "old inventory is not a subset of the new inventory".to_string(),
        ));
    }
    let degenerate_before = generated_before.is_empty();
    let obsolete_fraction = if degenerate_before {
        0.0
    } else {
        let dropped = generated_before.difference(generated_after).count();
        dropped as f64 / generated_before.len() as f64
    };
    let subsumed_still_generated_fraction = if generated_after.is_empty() {
        0.0
    } else {
        let subsumed = generated_after
            .iter()
            .filter(|s| old_inventory.contains(*s) && !ref_after.contains(*s))
            .count();
        subsumed as f64 / generated_after.len() as f64
    };
    Ok(InventoryUsageReport {
        obsolete_fraction,
        subsumed_still_generated_fraction,
        degenerate_before,
        new_vocab_f1_trajectory: Vec::new(),
    })
}

/// The unique bare symbols (markers stripped) of a segmented corpus; the
/// type set the inventory-usage fractions are computed over.
pub fn unique_symbols<S: AsRef<str>>(corpus: &[Vec<S>]) -> BTreeSet<String> {
    corpus
        .iter()
        .flatten()
        .map(|t| strip_marker(t.as_ref()).to_string())
        .collect()
}

/// Mean subword pieces per word instance plus the piece-count histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubwordStats {
    pub mean_pieces_per_word: f64,
    pub n_words: u64,
    pub histogram: BTreeMap<u64, u64>,
}

/// Groups a segmented corpus back into words by continuation markers and
/// tallies pieces per word. A marker run left open at the end of a sentence
/// still counts as one word. Errors when the corpus contains no words at all.
pub fn subwords_per_word<S: AsRef<str>>(corpus: &[Vec<S>]) -> Result<SubwordStats> {
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut n_words: u64 = 0;
    let mut total_pieces: u64 = 0;
    for sentence in corpus {
        let mut run: u64 = 0;
        for token in sentence {
            run += 1;
            if !token.as_ref().ends_with(MARKER) {
                *histogram.entry(run).or_insert(0) += 1;
                n_words += 1;
                total_pieces += run;
                run = 0;
            }
        }
        if run > 0 {
            *histogram.entry(run).or_insert(0) += 1;
            n_words += 1;
            total_pieces += run;
        }
    }
    if n_words == 0 {
        return Err(Error::Degenerate(
            "mean pieces per word is undefined on an empty corpus".to_string(),
        ));
    }
    Ok(SubwordStats {
        mean_pieces_per_word: total_pieces as f64 / n_words as f64,
        n_words,
        histogram,
    })
}

/// Length-normalized sentence score:
/// `score * (1 + |gamma * src_len - gen_len| / gen_len)`.
pub fn length_norm_score(score: f64, gamma: f64, src_len: u64, gen_len: u64) -> Result<f64> {
    if gen_len == 0 {
        return Err(Error::InvalidInput(
            "generated length must be at least 1".to_string(),
        ));
    }
    let mismatch = (gamma * src_len as f64 - gen_len as f64).abs() / gen_len as f64;
    Ok(score * (1.0 + mismatch))
}
