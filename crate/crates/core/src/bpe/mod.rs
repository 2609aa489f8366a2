//! Byte-pair-encoding merge tables with the nesting property: a table
//! learned with more operations has every smaller table as an exact prefix,
//! so an inventory can be grown in place without invalidating earlier merges.
//!
//! Words are plain sequences of Unicode scalar values; no end-of-word
//! sentinel is used. The `@@` continuation marker is attached to non-final
//! pieces only when a segmentation is rendered as surface tokens, which keeps
//! learning and application exact inverses of each other.

mod learner;
mod segment;

pub mod io;

pub use learner::{count_pairs, extend_merges, learn_merges};
pub use segment::{
    apply_to_corpus, detokenize_corpus, detokenize_sentence, segment_word, strip_marker,
    Detokenized, MARKER,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// One merge rule: adjacent occurrences of (`left`, `right`) become `result`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MergeOp {
    left: String,
    right: String,
    result: String,
}

impl MergeOp {
    pub fn new(left: impl Into<String>, right: impl Into<String>) -> Self {
        let left = left.into();
        let right = right.into();
        let result = format!("{left}{right}");
        MergeOp {
            left,
            right,
            result,
        }
    }

    pub fn left(&self) -> &str {
        &self.left
    }

    pub fn right(&self) -> &str {
        &self.right
    }

    /// Concatenation of `left` and `right`.
    pub fn result(&self) -> &str {
        &self.result
    }

    pub fn pair(&self) -> (&str, &str) {
        (&self.left, &self.right)
    }
}

/// An ordered sequence of merge operations.
///
/// The position of an op is its *rank*; applying the first `k` ops of any
/// table yields the same segmentation as a table learned with `k` ops from
/// the same corpus. Duplicate (left, right) pairs are rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    ops: Vec<MergeOp>,
    rank: HashMap<(String, String), usize>,
}

impl MergeTable {
    pub fn new() -> Self {
        MergeTable::default()
    }

    /// Builds a table from ops, validating the no-duplicate-pair invariant.
    pub fn from_ops(ops: impl IntoIterator<Item = MergeOp>) -> Result<Self> {
        let mut table = MergeTable::new();
        for op in ops {
            table.push(op)?;
        }
        Ok(table)
    }

    pub(crate) fn push(&mut self, op: MergeOp) -> Result<()> {
        let key = (op.left.clone(), op.right.clone());
        if self.rank.contains_key(&key) {
            return Err(Error::InvalidInput(format!(
                "duplicate merge pair ({} {})",
                op.left, op.right
            )));
        }
        self.rank.insert(key, self.ops.len());
        self.ops.push(op);
        Ok(())
    }

    pub fn ops(&self) -> &[MergeOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Rank of the op merging (`left`, `right`), if present.
    pub fn rank_of(&self, left: &str, right: &str) -> Option<usize> {
        // Keyed lookup without allocating when the borrow checker allows it
        // would need a raw-entry API; two small clones per query are fine.
        self.rank.get(&(left.to_string(), right.to_string())).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MergeOp> {
        self.ops.iter()
    }
}

/// Word type → occurrence count. Keys are whitespace-free and non-empty,
/// counts are at least one. Iteration order is the sorted word order, which
/// keeps everything downstream deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordFrequencyMap {
    entries: BTreeMap<String, u64>,
}

impl WordFrequencyMap {
    /// Validates and collects (word, count) pairs; counts for repeated words
    /// are summed.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (word, count) in counts {
            if word.is_empty() {
                return Err(Error::InvalidInput(
                    "empty word in frequency map".to_string(),
                ));
            }
            if word.chars().any(char::is_whitespace) {
                return Err(Error::InvalidInput(format!(
                    "word `{word}` contains whitespace"
                )));
            }
            if count == 0 {
                return Err(Error::InvalidInput(format!("zero count for `{word}`")));
            }
            *entries.entry(word).or_insert(0) += count;
        }
        Ok(WordFrequencyMap { entries })
    }

    /// Tallies the tokens of a corpus of pre-tokenized sentences.
    pub fn from_corpus<S: AsRef<str>>(sentences: &[Vec<S>]) -> Result<Self> {
        let mut entries: BTreeMap<String, u64> = BTreeMap::new();
        for sentence in sentences {
            for token in sentence {
                let token = token.as_ref();
                if token.is_empty() {
                    return Err(Error::InvalidInput("empty token in corpus".to_string()));
                }
                *entries.entry(token.to_string()).or_insert(0) += 1;
            }
        }
        Ok(WordFrequencyMap { entries })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(w, &c)| (w.as_str(), c))
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The set of distinct characters over all words.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.entries
            .keys()
            .flat_map(|w| w.chars())
            .map(String::from)
            .collect()
    }
}

/// A word split into subword pieces. Pieces are stored bare; the `@@`
/// continuation marker appears only in [`SegmentedWord::surface_tokens`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedWord {
    pieces: Vec<String>,
}

impl SegmentedWord {
    pub(crate) fn from_pieces(pieces: Vec<String>) -> Self {
        debug_assert!(!pieces.is_empty());
        SegmentedWord { pieces }
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// The pieces as written to a segmented corpus: every piece but the last
    /// carries the continuation marker.
    pub fn surface_tokens(&self) -> Vec<String> {
        let last = self.pieces.len() - 1;
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if i < last {
                    format!("{p}{MARKER}")
                } else {
                    p.clone()
                }
            })
            .collect()
    }

    /// Concatenation of the pieces; always equals the original word.
    pub fn join(&self) -> String {
        self.pieces.concat()
    }
}

/// Sentences of surface tokens produced by [`apply_to_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SegmentedCorpus {
    pub sentences: Vec<Vec<String>>,
}

impl SegmentedCorpus {
    pub fn to_lines(&self) -> Vec<String> {
        self.sentences.iter().map(|s| s.join(" ")).collect()
    }
}

/// One newly reachable symbol together with the components it merges.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct InventoryDelta {
    pub symbol: String,
    pub left: String,
    pub right: String,
}

/// The symbol set reachable with the first `k` merges: the character
/// alphabet plus every op result of rank below `k`.
///
/// Panics if `k` exceeds the table length.
pub fn symbol_inventory(
    table: &MergeTable,
    k: usize,
    alphabet: &BTreeSet<String>,
) -> BTreeSet<String> {
    assert!(k <= table.len(), "k={k} exceeds table length {}", table.len());
    let mut inventory = alphabet.clone();
    for op in &table.ops()[..k] {
        inventory.insert(op.result().to_string());
    }
    inventory
}

/// The ops in ranks `[k_old, k_new)` as (symbol, left, right) entries, in
/// rank order. Components of each entry exist in the inventory at the entry's
/// own rank, so processing the list in order never dangles.
///
/// Panics unless `k_old <= k_new <= table.len()`.
pub fn diff_inventory(table: &MergeTable, k_old: usize, k_new: usize) -> Vec<InventoryDelta> {
    assert!(k_old <= k_new, "k_old={k_old} exceeds k_new={k_new}");
    assert!(
        k_new <= table.len(),
        "k_new={k_new} exceeds table length {}",
        table.len()
    );
    table.ops()[k_old..k_new]
        .iter()
        .map(|op| InventoryDelta {
            symbol: op.result().to_string(),
            left: op.left().to_string(),
            right: op.right().to_string(),
        })
        .collect()
}
