//! SC, SCL, SCL-flip and partitioned SCL-flip decoders.

mod flip;
mod list;
mod psclf;
mod sc;

pub use flip::{build_flip_candidates, flip_metric, FlipNode, FlipQueue, SortRecord};
pub use list::{Candidate, ListDecoder, PartitionSnapshot};
pub use psclf::{
    ca_scl_decode, penalize_failed_paths, psclf_decode, scl_decode, scl_decode_segment,
    sclf_decode, Decoder,
};
pub use sc::sc_decode;
pub(crate) use sc::trajectory_leaf_llrs;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Check-node and path-metric arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `f = sign * sign * min`, metric grows by `|LLR|` on disagreement.
    #[default]
    MinSum,
    /// Exact box-plus and `ln(1 + e^-x)` metric update.
    Exact,
}

/// What happens to the list once a partition's CRC is satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartMode {
    /// Keep every path and metric unchanged.
    #[default]
    CheckKeep,
    /// Add the penalty constant to the metric of every path failing the CRC.
    CheckRemove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderConfig {
    pub list_size: usize,
    pub omega: usize,
    pub t_max: usize,
    pub alpha: f64,
    pub restart: RestartMode,
    pub penalty: f64,
    pub kernel: Kernel,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            list_size: 2,
            omega: 1,
            t_max: 20,
            alpha: 1.0,
            restart: RestartMode::CheckKeep,
            penalty: 1e6,
            kernel: Kernel::MinSum,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.list_size.is_power_of_two() || self.list_size > 1 << 15 {
            return Err(invalid(format!("list size {} is not a power of two", self.list_size)));
        }
        if self.t_max == 0 {
            return Err(invalid("t_max must be at least 1"));
        }
        if self.omega == 0 {
            return Err(invalid("omega must be at least 1"));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha {} must be a finite value >= 1", self.alpha)));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(invalid("penalty must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeStatus {
    Success,
    /// No path satisfied the CRC of partition `p` (1-based, `p < P`).
    EarlyTerminated(usize),
    /// The last partition used up its trials.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// Decoded message on success.
    pub message: Option<Vec<u8>>,
    /// Trials spent in each partition that was entered.
    pub trials_per_partition: Vec<usize>,
    /// Per entered partition: some path satisfied the check while carrying
    /// wrong bits in that partition. Only meaningful when a truth vector was
    /// supplied.
    pub collision_observed: Vec<bool>,
}

impl DecodeOutcome {
    pub fn is_success(&self) -> bool {
        self.status == DecodeStatus::Success
    }

    pub fn total_trials(&self) -> usize {
        self.trials_per_partition.iter().sum()
    }
}
