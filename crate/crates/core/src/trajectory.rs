//! Generation steps, trajectories, and step-text parsing.

use serde::{Deserialize, Serialize};

/// One delimiter-bounded chunk of generated text: the atomic unit the
/// verifier scores and the ledger counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStep {
    /// Step text. Never contains the configured step delimiter; callers that
    /// segment raw model output enforce this at parse time.
    pub text: String,
    /// Tokens attributed to this step. Synthetic backends count one token
    /// per character; remote backends report endpoint usage when available,
    /// otherwise `approx_token_count`.
    pub token_count: u64,
    /// Whether this step ends the solution (end-of-answer marker or an
    /// end-of-sequence signal from the backend).
    pub is_terminal: bool,
}

impl GenerationStep {
    pub fn new(text: impl Into<String>, token_count: u64, is_terminal: bool) -> Self {
        Self { text: text.into(), token_count, is_terminal }
    }
}

/// Fallback token estimate when an endpoint does not report usage:
/// roughly four bytes per token, rounded up.
pub fn approx_token_count(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

/// Lifecycle of a candidate during search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryStatus {
    /// Still eligible for extension and branching.
    Active,
    /// Last step was terminal; frozen, kept for final selection.
    Completed,
    /// A length cap fired (per-step token cap or the cycle cap) before any
    /// terminal step; frozen like a completed candidate.
    Truncated,
}

/// A candidate solution: an ordered list of steps plus the scores the
/// verifier has assigned to its prefixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Identifier of the question this candidate answers.
    pub prompt_id: String,
    pub steps: Vec<GenerationStep>,
    /// One entry per verifier invocation on this trajectory's prefixes,
    /// in invocation order.
    pub score_history: Vec<f64>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn new(prompt_id: impl Into<String>) -> Self {
        Self {
            prompt_id: prompt_id.into(),
            steps: Vec::new(),
            score_history: Vec::new(),
            status: TrajectoryStatus::Active,
        }
    }

    /// Appends a step and transitions to `Completed` on a terminal step.
    pub fn push_step(&mut self, step: GenerationStep) {
        let terminal = step.is_terminal;
        self.steps.push(step);
        if terminal {
            self.status = TrajectoryStatus::Completed;
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == TrajectoryStatus::Active
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Step texts joined with the given delimiter.
    pub fn joined_text(&self, delimiter: &str) -> String {
        let texts: Vec<&str> = self.steps.iter().map(|s| s.text.as_str()).collect();
        texts.join(delimiter)
    }

    /// Raw concatenation of step texts, no delimiter. Character-level
    /// testbeds compare this against their targets.
    pub fn concat_text(&self) -> String {
        self.steps.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn step_texts(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.text.clone()).collect()
    }

    /// Most recent verifier score, if any prefix has been scored.
    pub fn last_score(&self) -> Option<f64> {
        self.score_history.last().copied()
    }
}

/// Splits raw text into steps on `delimiter`.
///
/// A single trailing delimiter is absorbed; empty fragments produced by
/// repeated delimiters are dropped, so joining the returned step texts with
/// the delimiter reconstructs the input up to one optional trailing
/// delimiter. Token counts use the byte approximation; terminal detection is
/// the caller's concern.
pub fn parse_steps(text: &str, delimiter: &str) -> Vec<GenerationStep> {
    assert!(!delimiter.is_empty(), "step delimiter must be non-empty");
    text.split(delimiter)
        .filter(|fragment| !fragment.is_empty())
        .map(|fragment| GenerationStep::new(fragment, approx_token_count(fragment), false))
        .collect()
}
