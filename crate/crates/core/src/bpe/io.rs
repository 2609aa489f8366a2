//! Merges-file and vocab-report formats.
//!
//! Merges file: UTF-8 text, header line `#incbpe merges v1`, then one op per
//! line as `left<SPACE>right`; the rank of an op is its 0-based line number
//! after the header. Vocab report: `symbol<TAB>count` lines sorted by
//! descending count then lexicographic.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{MergeOp, MergeTable, SegmentedCorpus};

pub const MERGES_HEADER: &str = "#incbpe merges v1";

pub fn write_merges<W: Write>(table: &MergeTable, mut writer: W) -> Result<()> {
    writeln!(writer, "{MERGES_HEADER}")?;
    for op in table.iter() {
        writeln!(writer, "{} {}", op.left(), op.right())?;
    }
    Ok(())
}

pub fn read_merges<R: BufRead>(reader: R) -> Result<MergeTable> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(header)) if header == MERGES_HEADER => {}
        Some(Ok(other)) => {
            return Err(Error::Parse(format!(
                "bad merges header: expected `{MERGES_HEADER}`, found `{other}`"
            )))
        }
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::Parse("empty merges file".to_string())),
    }
    let mut table = MergeTable::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let (left, right) = match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
            _ => {
                return Err(Error::Parse(format!(
                    "merges line {} is not `left right`: `{line}`",
                    idx + 2
                )))
            }
        };
        table.push(MergeOp::new(left, right)).map_err(|_| {
            Error::Parse(format!(
                "merges line {} repeats pair `{line}`",
                idx + 2
            ))
        })?;
    }
    Ok(table)
}

pub fn read_merges_path(path: &std::path::Path) -> Result<MergeTable> {
    let file = std::fs::File::open(path)?;
    read_merges(std::io::BufReader::new(file))
}

/// Surface-token counts of a segmented corpus; the distinct-key count is the
/// resulting vocabulary size at the corpus' merge level.
pub fn vocab_counts(corpus: &SegmentedCorpus) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for sentence in &corpus.sentences {
        for token in sentence {
            *counts.entry(token.clone()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn write_vocab_report<W: Write>(counts: &BTreeMap<String, u64>, mut writer: W) -> Result<()> {
    let mut rows: Vec<(&String, &u64)> = counts.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (symbol, count) in rows {
        writeln!(writer, "{symbol}\t{count}")?;
    }
    Ok(())
}

/// Parses `symbol<TAB>count` lines (the vocab-report format), also used for
/// training word counts.
pub fn read_counts<R: BufRead>(reader: R) -> Result<BTreeMap<String, u64>> {
    let mut counts = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (symbol, count) = line.split_once('\t').ok_or_else(|| {
            Error::Parse(format!("counts line {}: expected `symbol<TAB>count`", idx + 1))
        })?;
        let count: u64 = count.parse().map_err(|_| {
            Error::Parse(format!("counts line {}: bad count `{count}`", idx + 1))
        })?;
        counts.insert(symbol.to_string(), count);
    }
    Ok(counts)
}

/// Reads a one-sentence-per-line, space-separated corpus. Blank lines are
/// empty sentences.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut sentences = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.is_empty() {
            sentences.push(Vec::new());
        } else {
            sentences.push(line.split(' ').map(String::from).collect());
        }
    }
    Ok(sentences)
}

pub fn read_corpus_path(path: &std::path::Path) -> Result<Vec<Vec<String>>> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn write_corpus<W: Write>(sentences: &[Vec<String>], mut writer: W) -> Result<()> {
    for sentence in sentences {
        writeln!(writer, "{}", sentence.join(" "))?;
    }
    Ok(())
}
