//! Exact operation counts for a search run.
//!
//! The ledger records what actually happened (steps proposed, tokens
//! generated, verifier calls made), as opposed to the closed-form cost
//! model's estimates. Merging ledgers is plain counter addition, so
//! parallel workers each fill their own ledger and the totals are merged
//! at synchronization points in a fixed order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    /// Generation steps requested from the proposer.
    pub proposer_steps: u64,
    /// Tokens across all proposed steps.
    pub proposer_tokens: u64,
    /// Scoring calls made to the verifier.
    pub verifier_calls: u64,
    /// Full verify cycles executed.
    pub cycles_executed: u64,
}

impl CostLedger {
    pub fn record_step(&mut self, token_count: u64) {
        self.proposer_steps += 1;
        self.proposer_tokens += token_count;
    }

    /// Adds `other`'s counters into `self`.
    pub fn absorb(&mut self, other: CostLedger) {
        self.proposer_steps += other.proposer_steps;
        self.proposer_tokens += other.proposer_tokens;
        self.verifier_calls += other.verifier_calls;
        self.cycles_executed += other.cycles_executed;
    }
}

/// Counter-wise sum of two ledgers.
pub fn merge_ledgers(a: CostLedger, b: CostLedger) -> CostLedger {
    let mut out = a;
    out.absorb(b);
    out
}
