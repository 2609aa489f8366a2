//! Applying a merge-table prefix to words and corpora, and the inverse.

use crate::error::{Error, Result};

use super::{MergeTable, SegmentedCorpus, SegmentedWord};

/// Continuation marker carried by every non-final piece of a word.
pub const MARKER: &str = "@@";

/// The token without its continuation marker, if it carries one.
pub fn strip_marker(token: &str) -> &str {
    token.strip_suffix(MARKER).unwrap_or(token)
}

/// Segments a word with the first `k` merges of the table.
///
/// Starting from the character sequence, merges are applied in rank order;
/// within a word each merge joins its pair at all adjacent occurrences,
/// leftmost first. Implemented by repeatedly applying the lowest-ranked pair
/// present, which yields the same result because a merge can never create an
/// adjacency for a lower-ranked pair.
pub fn segment_word(word: &str, table: &MergeTable, k: usize) -> Result<SegmentedWord> {
    if word.is_empty() {
        return Err(Error::InvalidInput("cannot segment an empty word".to_string()));
    }
    if k > table.len() {
        return Err(Error::InvalidInput(format!(
            "requested {k} merge ops but the table has only {}",
            table.len()
        )));
    }
    let mut pieces: Vec<String> = word.chars().map(String::from).collect();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..pieces.len().saturating_sub(1) {
            if let Some(rank) = table.rank_of(&pieces[i], &pieces[i + 1]) {
                if rank < k && best.is_none_or(|(r, _)| rank < r) {
                    best = Some((rank, i));
                }
            }
        }
        let Some((_, pos)) = best else { break };
        let merged = format!("{}{}", pieces[pos], pieces[pos + 1]);
        pieces[pos] = merged;
        pieces.remove(pos + 1);
    }
    Ok(SegmentedWord::from_pieces(pieces))
}

/// Segments every token of every sentence, preserving sentence boundaries.
/// Tokens are replaced by their surface pieces in order.
pub fn apply_to_corpus<S: AsRef<str>>(
    sentences: &[Vec<S>],
    table: &MergeTable,
    k: usize,
) -> Result<SegmentedCorpus> {
    let mut out = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        let mut tokens = Vec::new();
        for word in sentence {
            tokens.extend(segment_word(word.as_ref(), table, k)?.surface_tokens());
        }
        out.push(tokens);
    }
    Ok(SegmentedCorpus { sentences: out })
}

/// Result of joining a segmented token sequence back into words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detokenized {
    pub tokens: Vec<String>,
    /// True when the sequence ended inside a word (a trailing continuation
    /// marker). The partial word is still emitted, joined as-is.
    pub trailing_marker: bool,
}

/// Joins each maximal marker run `x@@ … y@@ z` into one token with the
/// markers stripped. Exact inverse of [`apply_to_corpus`] on its output.
pub fn detokenize_sentence<S: AsRef<str>>(tokens: &[S]) -> Detokenized {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut pending = false;
    for token in tokens {
        match token.as_ref().strip_suffix(MARKER) {
            Some(stem) => {
                current.push_str(stem);
                pending = true;
            }
            None => {
                current.push_str(token.as_ref());
                out.push(std::mem::take(&mut current));
                pending = false;
            }
        }
    }
    if pending && !current.is_empty() {
        out.push(current);
    }
    Detokenized {
        tokens: out,
        trailing_marker: pending,
    }
}

/// Sentence-wise [`detokenize_sentence`].
pub fn detokenize_corpus(corpus: &SegmentedCorpus) -> Vec<Detokenized> {
    corpus
        .sentences
        .iter()
        .map(|tokens| detokenize_sentence(tokens))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{learn_merges, WordFrequencyMap};
    use super::*;

    fn toy_table() -> MergeTable {
        let freqs =
            WordFrequencyMap::from_counts([("ab".to_string(), 3), ("abc".to_string(), 2)])
                .unwrap();
        learn_merges(&freqs, 2).unwrap()
    }

    #[test]
    fn segment_applies_prefix_of_table() {
        let table = toy_table();
        let one = segment_word("abc", &table, 1).unwrap();
        assert_eq!(one.surface_tokens(), vec!["ab@@", "c"]);
        let two = segment_word("abc", &table, 2).unwrap();
        assert_eq!(two.surface_tokens(), vec!["abc"]);
    }

    #[test]
    fn segment_unknown_word_falls_through_to_chars() {
        let table = toy_table();
        let seg = segment_word("xyz", &table, 2).unwrap();
        assert_eq!(seg.surface_tokens(), vec!["x@@", "y@@", "z"]);
    }

    #[test]
    fn segment_zero_ops_is_character_level() {
        let table = toy_table();
        let seg = segment_word("abc", &table, 0).unwrap();
        assert_eq!(seg.surface_tokens(), vec!["a@@", "b@@", "c"]);
    }

    #[test]
    fn segment_rejects_empty_word_and_oversized_k() {
        let table = toy_table();
        assert!(segment_word("", &table, 0).is_err());
        let err = segment_word("abc", &table, 3).unwrap_err();
        assert!(err.to_string().contains("only 2"));
    }

    #[test]
    fn segment_join_restores_word() {
        let table = toy_table();
        for word in ["abc", "ab", "xyzzy", "ça"] {
            for k in 0..=2 {
                assert_eq!(segment_word(word, &table, k).unwrap().join(), word);
            }
        }
    }

    #[test]
    fn apply_preserves_sentence_boundaries() {
        let table = toy_table();
        let corpus = vec![vec!["ab", "abc"]];
        let out = apply_to_corpus(&corpus, &table, 1).unwrap();
        assert_eq!(out.to_lines(), vec!["ab ab@@ c"]);
    }

    #[test]
    fn apply_empty_corpus_is_empty() {
        let table = toy_table();
        let out = apply_to_corpus::<&str>(&[], &table, 1).unwrap();
        assert!(out.sentences.is_empty());
    }

    #[test]
    fn detok_joins_marker_runs() {
        let got = detokenize_sentence(&["Pohy@@", "bují", "se"]);
        assert_eq!(got.tokens, vec!["Pohybují", "se"]);
        assert!(!got.trailing_marker);
    }

    #[test]
    fn detok_without_markers_is_identity() {
        let got = detokenize_sentence(&["a", "b", "c"]);
        assert_eq!(got.tokens, vec!["a", "b", "c"]);
        assert!(!got.trailing_marker);
    }

    #[test]
    fn detok_flags_trailing_marker_but_joins() {
        let got = detokenize_sentence(&["a@@", "b@@"]);
        assert_eq!(got.tokens, vec!["ab"]);
        assert!(got.trailing_marker);
    }

    #[test]
    fn round_trip_through_apply() {
        let table = toy_table();
        let corpus = vec![vec!["ab", "abc"], vec!["xyz"]];
        for k in 0..=2 {
            let segmented = apply_to_corpus(&corpus, &table, k).unwrap();
            let back = detokenize_corpus(&segmented);
            for (orig, got) in corpus.iter().zip(&back) {
                assert_eq!(&got.tokens, orig);
                assert!(!got.trailing_marker);
            }
        }
    }
}
