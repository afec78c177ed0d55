//! Proposer/verifier abstractions and their implementations.
//!
//! Synthetic backends (`imt`, `bernoulli`, `scripted`) are deterministic
//! functions of a derived seed, so searches reproduce bit-for-bit regardless
//! of scheduling. Wrappers add stochastic imperfection on top of any
//! verifier; `remote` speaks HTTP to real model endpoints.

pub mod bernoulli;
pub mod imt;
pub mod remote;
pub mod scripted;
mod seed;
pub mod wrappers;

pub use bernoulli::BernoulliTreeTask;
pub use imt::ImtTask;
pub use remote::{ProposerEndpoint, RemoteProposer, RemoteVerifier, VerifierEndpoint};
pub use scripted::{ScriptedTask, ScriptedVerifier};
pub use seed::{call_seed, content_seed, mix_seed};
pub use wrappers::{EnsembleVerifier, FlipVerifier, NoisyVerifier};

use crate::trajectory::{GenerationStep, Trajectory};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("verifier returned no scores")]
    NoScores,
    #[error("{0}")]
    InvalidTask(String),
}

/// Where in the search a proposer call originates. Together with the
/// trajectory's prompt id and step history this pins down the call's
/// derived seed, so identical call sites replay identical steps.
#[derive(Debug, Clone, Copy)]
pub struct ProposeContext {
    pub run_seed: u64,
    pub cycle: u32,
    pub beam: u32,
    pub branch: u32,
}

impl ProposeContext {
    pub fn new(run_seed: u64, cycle: u32, beam: u32, branch: u32) -> Self {
        Self { run_seed, cycle, beam, branch }
    }

    /// Seed for this call, folding in the trajectory identity.
    pub fn derived_seed(&self, trajectory: &Trajectory) -> u64 {
        call_seed(
            self.run_seed,
            &trajectory.prompt_id,
            self.cycle,
            self.beam,
            self.branch,
            &trajectory.steps,
        )
    }

    /// Seed that ignores the branch index; sibling branches share it and
    /// may use the index itself to diversify (see the character testbed).
    pub fn branchless_seed(&self, trajectory: &Trajectory) -> u64 {
        call_seed(self.run_seed, &trajectory.prompt_id, self.cycle, self.beam, 0, &trajectory.steps)
    }
}

/// Outcome of one proposer call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepProposal {
    pub step: GenerationStep,
    /// True when the per-step token cap cut generation off before any
    /// natural stop; the search truncates such candidates.
    pub hit_token_cap: bool,
}

impl StepProposal {
    pub fn of(step: GenerationStep) -> Self {
        Self { step, hit_token_cap: false }
    }
}

/// Score of one verifier call.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifierScore {
    /// Selection score in [0,1]; for per-step verifiers this is the last
    /// step's score of the full prefix.
    pub value: f64,
    /// Per-step breakdown when the verifier provides one (remote process
    /// reward models do); empty otherwise.
    pub step_scores: Vec<f64>,
}

impl VerifierScore {
    pub fn scalar(value: f64) -> Self {
        Self { value, step_scores: Vec::new() }
    }
}

/// Candidate-step generator. Implementations must be deterministic given
/// (run seed, prompt id, full step history, cycle index, branch index) and
/// tolerate concurrent calls on distinct trajectories.
pub trait Proposer: Send + Sync {
    fn propose_step(
        &self,
        trajectory: &Trajectory,
        ctx: &ProposeContext,
    ) -> Result<StepProposal, BackendError>;
}

/// Prefix scorer. The score must be a pure function of trajectory content
/// (plus the wrapper's own seed for stochastic verifiers).
pub trait Verifier: Send + Sync {
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError>;
}
