//! Loss-driven vocabulary growth schedule.
//!
//! A deterministic state machine consuming one validation-loss value per
//! epoch. Growth triggers when the loss increases or when its absolute change
//! falls within a threshold; a burn-in window after each increment suppresses
//! further growth while the model absorbs the new vocabulary, and training
//! stops once a patience budget has elapsed from the first loss increase.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schedule parameters. Defaults are the reference operating point:
/// threshold 0.05, burn-in 3 epochs, a 10k–60k increment ladder in 10k
/// steps, and a patience of 10 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    #[serde(default = "default_loss_threshold")]
    pub loss_threshold: f64,
    #[serde(default = "default_burn_in_epochs")]
    pub burn_in_epochs: u64,
    #[serde(default = "default_increments")]
    pub increments: Vec<u64>,
    #[serde(default = "default_patience_epochs")]
    pub patience_epochs: u64,
}

fn default_loss_threshold() -> f64 {
    0.05
}

fn default_burn_in_epochs() -> u64 {
    3
}

fn default_increments() -> Vec<u64> {
    vec![10_000, 20_000, 30_000, 40_000, 50_000, 60_000]
}

fn default_patience_epochs() -> u64 {
    10
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            loss_threshold: default_loss_threshold(),
            burn_in_epochs: default_burn_in_epochs(),
            increments: default_increments(),
            patience_epochs: default_patience_epochs(),
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_threshold > 0.0) || !self.loss_threshold.is_finite() {
            return Err(Error::Configuration(format!(
                "loss_threshold must be a positive finite number, got {}",
                self.loss_threshold
            )));
        }
        if self.increments.is_empty() {
            return Err(Error::Configuration(
                "increments ladder must not be empty".to_string(),
            ));
        }
        if !self.increments.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Configuration(
                "increments must be strictly increasing".to_string(),
            ));
        }
        if self.patience_epochs == 0 {
            return Err(Error::Configuration(
                "patience_epochs must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// What the trainer should do after an observed epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleDecision {
    Continue,
    /// Grow the target inventory to this many merge ops.
    Increment(u64),
    Stop,
}

/// Mutable schedule state. Snapshots are plain values; once `Stop` has been
/// emitted no further transition is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleState {
    config: ScheduleConfig,
    current_increment_index: usize,
    epoch: u64,
    last_loss: Option<f64>,
    burn_in_remaining: u64,
    first_increase_epoch: Option<u64>,
    stopped: bool,
}

impl ScheduleState {
    pub fn new(config: ScheduleConfig) -> Result<Self> {
        config.validate()?;
        Ok(ScheduleState {
            config,
            current_increment_index: 0,
            epoch: 0,
            last_loss: None,
            burn_in_remaining: 0,
            first_increase_epoch: None,
            stopped: false,
        })
    }

    pub fn config(&self) -> &ScheduleConfig {
        &self.config
    }

    /// Epochs observed so far.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// The merge-op count of the active inventory rung.
    pub fn current_target_ops(&self) -> u64 {
        self.config.increments[self.current_increment_index]
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    /// Feeds one epoch's validation loss and returns the decision.
    ///
    /// The first observation only seeds the comparison. Afterwards the step
    /// triggers when the loss rose or changed by at most the threshold; the
    /// first strict rise starts the patience clock, and once `patience_epochs`
    /// epochs have passed since then the schedule stops for good. A trigger
    /// during burn-in is not queued: the condition must fire again once the
    /// burn-in window has drained.
    pub fn observe_epoch(&mut self, loss: f64) -> Result<ScheduleDecision> {
        if self.stopped {
            return Err(Error::StateMachine(
                "observe_epoch called after Stop".to_string(),
            ));
        }
        if !loss.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite loss {loss}")));
        }
        self.epoch += 1;
        let Some(last) = self.last_loss else {
            self.last_loss = Some(loss);
            return Ok(ScheduleDecision::Continue);
        };

        let increased = loss > last;
        let trigger = increased || (loss - last).abs() <= self.config.loss_threshold;
        if increased && self.first_increase_epoch.is_none() {
            self.first_increase_epoch = Some(self.epoch);
        }
        self.last_loss = Some(loss);

        if let Some(first) = self.first_increase_epoch {
            if self.epoch - first >= self.config.patience_epochs {
                self.stopped = true;
                return Ok(ScheduleDecision::Stop);
            }
        }

        let next_exists = self.current_increment_index + 1 < self.config.increments.len();
        if trigger && self.burn_in_remaining == 0 && next_exists {
            self.current_increment_index += 1;
            self.burn_in_remaining = self.config.burn_in_epochs;
            return Ok(ScheduleDecision::Increment(self.current_target_ops()));
        }
        if self.burn_in_remaining > 0 {
            self.burn_in_remaining -= 1;
        }
        Ok(ScheduleDecision::Continue)
    }
}

/// Folds [`ScheduleState::observe_epoch`] over a loss sequence; the output is
/// truncated after the first `Stop`.
pub fn replay(config: &ScheduleConfig, losses: &[f64]) -> Result<Vec<ScheduleDecision>> {
    let mut state = ScheduleState::new(config.clone())?;
    let mut decisions = Vec::with_capacity(losses.len());
    for &loss in losses {
        let decision = state.observe_epoch(loss)?;
        decisions.push(decision);
        if decision == ScheduleDecision::Stop {
            break;
        }
    }
    Ok(decisions)
}
