//! Search configuration and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Knobs of a single verifier-guided search run.
///
/// The candidate width of the search is `beam_width * branch_factor`: each
/// retained beam fans out into `branch_factor` continuations before every
/// verification, and `beam_width` candidates survive each selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Verification granularity: generation steps between verifier calls.
    pub granularity: u32,
    /// Beams retained by each Verify&Select (B1).
    pub beam_width: u32,
    /// Single-step continuations generated per retained beam (B2).
    pub branch_factor: u32,
    /// Cycle cap (I); each cycle advances surviving candidates by
    /// `granularity` steps.
    pub max_cycles: u32,
    /// Text boundary between generation steps.
    pub step_delimiter: String,
    /// Per-step token cap passed to the proposer.
    pub max_tokens_per_step: u32,
    /// Run seed; all per-call randomness derives from it.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            granularity: 1,
            beam_width: 4,
            branch_factor: 4,
            max_cycles: 12,
            step_delimiter: "\n\n".to_string(),
            max_tokens_per_step: 2048,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{field} must be >= 1 (got {value})")]
    NonPositive { field: &'static str, value: u64 },
    #[error("step_delimiter must be non-empty")]
    EmptyDelimiter,
    #[error("n={n} is not divisible by branch_factor={branch_factor}")]
    IndivisibleBudget { n: u32, branch_factor: u32 },
}

impl SearchConfig {
    /// Validates every field, returning the config unchanged when all
    /// invariants hold. Errors name the offending field.
    pub fn validate(self) -> Result<Self, ConfigError> {
        let positive = |field: &'static str, value: u32| {
            if value == 0 {
                Err(ConfigError::NonPositive { field, value: value as u64 })
            } else {
                Ok(())
            }
        };
        positive("granularity", self.granularity)?;
        positive("beam_width", self.beam_width)?;
        positive("branch_factor", self.branch_factor)?;
        positive("max_cycles", self.max_cycles)?;
        positive("max_tokens_per_step", self.max_tokens_per_step)?;
        if self.step_delimiter.is_empty() {
            return Err(ConfigError::EmptyDelimiter);
        }
        Ok(self)
    }

    /// Total candidate width n = B1 * B2.
    pub fn candidate_width(&self) -> u64 {
        self.beam_width as u64 * self.branch_factor as u64
    }

    /// Sets the beam width from a generation budget: B1 = n / B2.
    /// Budgets that the branch factor does not divide are rejected rather
    /// than rounded.
    pub fn with_budget(mut self, n: u32) -> Result<Self, ConfigError> {
        if n == 0 {
            return Err(ConfigError::NonPositive { field: "n", value: 0 });
        }
        if n % self.branch_factor != 0 {
            return Err(ConfigError::IndivisibleBudget { n, branch_factor: self.branch_factor });
        }
        self.beam_width = n / self.branch_factor;
        Ok(self)
    }
}
