//! Schedule file formats: JSON-lines loss traces and decision logs, and a
//! JSON config file in which absent fields take the default values.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ScheduleConfig, ScheduleDecision};

/// One `{"epoch": <int>, "loss": <float>}` line of a loss trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTraceEntry {
    pub epoch: u64,
    pub loss: f64,
}

/// One line of a decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionLogEntry {
    pub epoch: u64,
    pub decision: String,
    pub target_ops: Option<u64>,
}

impl DecisionLogEntry {
    pub fn new(epoch: u64, decision: ScheduleDecision) -> Self {
        let (decision, target_ops) = match decision {
            ScheduleDecision::Continue => ("continue".to_string(), None),
            ScheduleDecision::Increment(ops) => ("increment".to_string(), Some(ops)),
            ScheduleDecision::Stop => ("stop".to_string(), None),
        };
        DecisionLogEntry {
            epoch,
            decision,
            target_ops,
        }
    }
}

/// Reads a loss trace, checking epochs are strictly increasing from 1.
/// Errors name the offending 1-based line number.
pub fn read_loss_trace<R: BufRead>(reader: R) -> Result<Vec<LossTraceEntry>> {
    let mut entries: Vec<LossTraceEntry> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let entry: LossTraceEntry = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("loss trace line {}: {e}", idx + 1)))?;
        let expected = entries.len() as u64 + 1;
        if entry.epoch != expected {
            return Err(Error::Parse(format!(
                "loss trace line {}: expected epoch {expected}, found {}",
                idx + 1,
                entry.epoch
            )));
        }
        if !entry.loss.is_finite() {
            return Err(Error::Parse(format!(
                "loss trace line {}: non-finite loss",
                idx + 1
            )));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_decision_log<W: Write>(entries: &[DecisionLogEntry], mut writer: W) -> Result<()> {
    for entry in entries {
        let line = serde_json::to_string(entry)
            .map_err(|e| Error::Parse(format!("encoding decision log: {e}")))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn read_decision_log<R: BufRead>(reader: R) -> Result<Vec<DecisionLogEntry>> {
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let entry: DecisionLogEntry = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("decision log line {}: {e}", idx + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Parses a config file; missing fields fall back to the defaults. The
/// returned config is validated.
pub fn read_config(text: &str) -> Result<ScheduleConfig> {
    let config: ScheduleConfig =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("schedule config: {e}")))?;
    config.validate()?;
    Ok(config)
}
