//! Greedy merge learning.
//!
//! At every step the most frequent adjacent symbol pair is merged, ties
//! broken by lexicographic order on (left, right). Pair counts are kept
//! incrementally: merging a pair inside a word only touches the pairs
//! adjacent to the merge sites, so each step updates a handful of entries
//! instead of recounting the corpus. Selection goes through a max-heap of
//! (count, pair) snapshots with lazy invalidation: every count change pushes
//! a fresh snapshot, and stale ones are discarded when popped.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use crate::error::{Error, Result};

use super::{MergeOp, MergeTable, WordFrequencyMap};

type Pair = (String, String);

/// Adjacent-pair counts of a segmented corpus: the count of (a, b) is the
/// number of adjacent (a, b) windows in each word's segmentation, weighted by
/// the word's frequency. Overlapping windows all count, so `aaa` contributes
/// two occurrences of (a, a).
pub fn count_pairs(
    freqs: &WordFrequencyMap,
    segmentation: &BTreeMap<String, Vec<String>>,
) -> Result<BTreeMap<Pair, u64>> {
    let mut counts: BTreeMap<Pair, u64> = BTreeMap::new();
    for (word, freq) in freqs.entries() {
        let pieces = segmentation
            .get(word)
            .ok_or_else(|| Error::MissingSegmentation(word.to_string()))?;
        for window in pieces.windows(2) {
            *counts
                .entry((window[0].clone(), window[1].clone()))
                .or_insert(0) += freq;
        }
    }
    Ok(counts)
}

/// Learns up to `n_ops` merges from word frequencies. Stops early when the
/// best remaining pair occurs fewer than two times.
pub fn learn_merges(freqs: &WordFrequencyMap, n_ops: usize) -> Result<MergeTable> {
    extend_merges(freqs, &MergeTable::new(), n_ops)
}

/// Extends `base` by up to `n_additional` merges learned from the same
/// frequencies. The result has `base` as an exact prefix and is identical to
/// relearning `base.len() + n_additional` ops from scratch.
pub fn extend_merges(
    freqs: &WordFrequencyMap,
    base: &MergeTable,
    n_additional: usize,
) -> Result<MergeTable> {
    if freqs.is_empty() {
        return Err(Error::InvalidInput(
            "cannot learn merges from an empty frequency map".to_string(),
        ));
    }

    let mut state = LearnerState::new(freqs);
    let mut table = MergeTable::new();

    // Replay the base table, verifying each op is applicable.
    for (rank, op) in base.iter().enumerate() {
        if state.count(op.pair()) == 0 {
            return Err(Error::InconsistentBase {
                rank,
                left: op.left().to_string(),
                right: op.right().to_string(),
            });
        }
        table.push(op.clone())?;
        state.apply_merge(op);
    }

    let target = base.len() + n_additional;
    let mut heap = state.snapshot_heap(&table);
    while table.len() < target {
        let Some(snapshot) = heap.pop() else { break };
        let current = state.count(snapshot.pair());
        if current < 2 || current != snapshot.count {
            continue; // dead or stale; live pairs have a fresh snapshot queued
        }
        if table.rank_of(&snapshot.pair.0, &snapshot.pair.1).is_some() {
            continue; // a later merge re-created adjacency for an earlier pair
        }
        let op = MergeOp::new(snapshot.pair.0.clone(), snapshot.pair.1.clone());
        table.push(op.clone())?;
        for (pair, count) in state.apply_merge(&op) {
            if count >= 2 {
                heap.push(Snapshot { count, pair });
            }
        }
    }
    Ok(table)
}

/// Max-heap entry ordered by count, ties resolved toward the
/// lexicographically smallest pair.
#[derive(Debug, PartialEq, Eq)]
struct Snapshot {
    count: u64,
    pair: Pair,
}

impl Snapshot {
    fn pair(&self) -> (&str, &str) {
        (&self.pair.0, &self.pair.1)
    }
}

impl Ord for Snapshot {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for Snapshot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct WordState {
    pieces: Vec<String>,
    freq: u64,
}

#[derive(Default)]
struct PairEntry {
    count: i64,
    /// Indices of words that contained the pair at some point. Stale entries
    /// are tolerated: merging scans the word and finds nothing.
    words: BTreeSet<usize>,
}

struct LearnerState {
    words: Vec<WordState>,
    pairs: HashMap<Pair, PairEntry>,
}

impl LearnerState {
    fn new(freqs: &WordFrequencyMap) -> Self {
        let words: Vec<WordState> = freqs
            .entries()
            .map(|(word, freq)| WordState {
                pieces: word.chars().map(String::from).collect(),
                freq,
            })
            .collect();
        let mut pairs: HashMap<Pair, PairEntry> = HashMap::new();
        for (idx, word) in words.iter().enumerate() {
            for window in word.pieces.windows(2) {
                let entry = pairs
                    .entry((window[0].clone(), window[1].clone()))
                    .or_default();
                entry.count += word.freq as i64;
                entry.words.insert(idx);
            }
        }
        LearnerState { words, pairs }
    }

    fn count(&self, pair: (&str, &str)) -> u64 {
        self.pairs
            .get(&(pair.0.to_string(), pair.1.to_string()))
            .map_or(0, |e| e.count.max(0) as u64)
    }

    /// Initial heap contents: every live pair not already in the table.
    fn snapshot_heap(&self, table: &MergeTable) -> BinaryHeap<Snapshot> {
        self.pairs
            .iter()
            .filter(|(pair, entry)| {
                entry.count >= 2 && table.rank_of(&pair.0, &pair.1).is_none()
            })
            .map(|(pair, entry)| Snapshot {
                count: entry.count as u64,
                pair: pair.clone(),
            })
            .collect()
    }

    /// Merges every adjacent occurrence of the op's pair (leftmost first) in
    /// every word that may contain it, and returns the updated count for each
    /// pair whose count changed.
    fn apply_merge(&mut self, op: &MergeOp) -> Vec<(Pair, u64)> {
        let key = (op.left().to_string(), op.right().to_string());
        let word_indices: Vec<usize> = match self.pairs.get(&key) {
            Some(entry) => entry.words.iter().copied().collect(),
            None => return Vec::new(),
        };
        let mut touched: BTreeSet<Pair> = BTreeSet::new();
        for idx in word_indices {
            let freq = self.words[idx].freq as i64;
            let deltas = merge_in_pieces(&mut self.words[idx].pieces, op);
            for (pair, delta) in deltas {
                let entry = self.pairs.entry(pair.clone()).or_default();
                entry.count += delta * freq;
                if delta > 0 {
                    entry.words.insert(idx);
                }
                touched.insert(pair);
            }
        }
        touched
            .into_iter()
            .map(|pair| {
                let count = self.pairs.get(&pair).map_or(0, |e| e.count.max(0) as u64);
                (pair, count)
            })
            .collect()
    }
}

/// Replaces non-overlapping leftmost occurrences of the op's pair and emits
/// per-occurrence pair-count deltas relative to the pass state: the merged
/// pair and its old neighbors go down, windows touching the new symbol go up.
fn merge_in_pieces(pieces: &mut Vec<String>, op: &MergeOp) -> Vec<(Pair, i64)> {
    let n = pieces.len();
    if n < 2 {
        return Vec::new();
    }
    let mut out: Vec<String> = Vec::with_capacity(n);
    let mut deltas: Vec<(Pair, i64)> = Vec::new();
    let mut i = 0;
    while i < n {
        let matches = i + 1 < n && pieces[i] == op.left() && pieces[i + 1] == op.right();
        if matches {
            if let Some(prev) = out.last() {
                deltas.push(((prev.clone(), op.left().to_string()), -1));
                deltas.push(((prev.clone(), op.result().to_string()), 1));
            }
            deltas.push(((op.left().to_string(), op.right().to_string()), -1));
            if i + 2 < n {
                deltas.push(((op.right().to_string(), pieces[i + 2].clone()), -1));
                deltas.push(((op.result().to_string(), pieces[i + 2].clone()), 1));
            }
            out.push(op.result().to_string());
            i += 2;
        } else {
            out.push(pieces[i].clone());
            i += 1;
        }
    }
    *pieces = out;
    deltas
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freqs(pairs: &[(&str, u64)]) -> WordFrequencyMap {
        WordFrequencyMap::from_counts(pairs.iter().map(|(w, c)| (w.to_string(), *c))).unwrap()
    }

    fn char_segmentation(map: &WordFrequencyMap) -> BTreeMap<String, Vec<String>> {
        map.entries()
            .map(|(w, _)| (w.to_string(), w.chars().map(String::from).collect()))
            .collect()
    }

    fn pairs_of(table: &MergeTable) -> Vec<(String, String)> {
        table
            .iter()
            .map(|op| (op.left().to_string(), op.right().to_string()))
            .collect()
    }

    #[test]
    fn count_pairs_weights_by_frequency() {
        let map = freqs(&[("ab", 3), ("abc", 2)]);
        let counts = count_pairs(&map, &char_segmentation(&map)).unwrap();
        let expected: BTreeMap<(String, String), u64> = [
            (("a".to_string(), "b".to_string()), 5),
            (("b".to_string(), "c".to_string()), 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(counts, expected);
    }

    #[test]
    fn count_pairs_single_char_word_is_empty() {
        let map = freqs(&[("a", 7)]);
        assert!(count_pairs(&map, &char_segmentation(&map)).unwrap().is_empty());
    }

    #[test]
    fn count_pairs_counts_overlapping_windows() {
        let map = freqs(&[("aaa", 2)]);
        let counts = count_pairs(&map, &char_segmentation(&map)).unwrap();
        assert_eq!(counts[&("a".to_string(), "a".to_string())], 4);
    }

    #[test]
    fn count_pairs_requires_segmentation_entry() {
        let map = freqs(&[("ab", 1)]);
        let err = count_pairs(&map, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::MissingSegmentation(w) if w == "ab"));
    }

    #[test]
    fn learn_follows_greedy_order() {
        let table = learn_merges(&freqs(&[("ab", 3), ("abc", 2)]), 2).unwrap();
        assert_eq!(
            pairs_of(&table),
            vec![
                ("a".to_string(), "b".to_string()),
                ("ab".to_string(), "c".to_string())
            ]
        );
        assert_eq!(table.ops()[1].result(), "abc");
    }

    #[test]
    fn learn_breaks_ties_lexicographically() {
        // (l,o) and (o,w) both occur 7 times; (l,o) sorts first.
        let table = learn_merges(&freqs(&[("low", 5), ("lowest", 2)]), 1).unwrap();
        assert_eq!(pairs_of(&table), vec![("l".to_string(), "o".to_string())]);
    }

    #[test]
    fn learn_zero_ops_is_empty() {
        let table = learn_merges(&freqs(&[("ab", 3)]), 0).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn learn_rejects_empty_freqs() {
        let empty = WordFrequencyMap::from_counts(std::iter::empty()).unwrap();
        assert!(learn_merges(&empty, 1).is_err());
    }

    #[test]
    fn learn_stops_before_hapax_pairs() {
        // Every pair in "xyz" occurs once; nothing is worth merging.
        let table = learn_merges(&freqs(&[("xyz", 1), ("q", 9)]), 10).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn learn_handles_overlapping_pair_runs() {
        // "aaaa" has three (a,a) windows; one pass merges positions 0-1 and 2-3.
        let table = learn_merges(&freqs(&[("aaaa", 3)]), 2).unwrap();
        assert_eq!(
            pairs_of(&table),
            vec![
                ("a".to_string(), "a".to_string()),
                ("aa".to_string(), "aa".to_string())
            ]
        );
    }

    #[test]
    fn extend_matches_full_relearn() {
        let map = freqs(&[("ab", 3), ("abc", 2)]);
        let base = learn_merges(&map, 1).unwrap();
        let extended = extend_merges(&map, &base, 1).unwrap();
        assert_eq!(extended, learn_merges(&map, 2).unwrap());
    }

    #[test]
    fn extend_from_empty_base_is_learn() {
        let map = freqs(&[("low", 5), ("lowest", 2)]);
        let extended = extend_merges(&map, &MergeTable::new(), 3).unwrap();
        assert_eq!(extended, learn_merges(&map, 3).unwrap());
    }

    #[test]
    fn extend_by_zero_returns_base() {
        let map = freqs(&[("low", 5), ("lowest", 2)]);
        let base = learn_merges(&map, 2).unwrap();
        assert_eq!(extend_merges(&map, &base, 0).unwrap(), base);
    }

    #[test]
    fn extend_rejects_inconsistent_base() {
        let map = freqs(&[("ab", 3)]);
        let alien = MergeTable::from_ops([MergeOp::new("x", "y")]).unwrap();
        let err = extend_merges(&map, &alien, 1).unwrap_err();
        assert!(matches!(err, Error::InconsistentBase { rank: 0, .. }));
    }

    #[test]
    fn merge_deltas_keep_counts_consistent() {
        // After merging, incremental counts must equal a fresh recount.
        let map = freqs(&[("abab", 2), ("aba", 1)]);
        let mut state = LearnerState::new(&map);
        let op = MergeOp::new("a", "b");
        state.apply_merge(&op);

        let segmentation: BTreeMap<String, Vec<String>> = map
            .entries()
            .enumerate()
            .map(|(i, (w, _))| (w.to_string(), state.words[i].pieces.clone()))
            .collect();
        let fresh = count_pairs(&map, &segmentation).unwrap();
        for (pair, entry) in &state.pairs {
            let expect = fresh.get(pair).copied().unwrap_or(0);
            assert_eq!(entry.count.max(0) as u64, expect, "pair {pair:?}");
        }
    }
}
