//! Hash-scripted deterministic trees for equivalence and cost tests.
//!
//! The proposer emits a pseudo-random token from a fixed vocabulary, fully
//! determined by the call's derived seed; the verifier scores a trajectory
//! by hashing its content to a uniform value. Together they pin down a
//! deterministic search tree with non-trivial selection decisions, which is
//! exactly what cross-implementation equivalence suites need. Step texts
//! have a fixed four-character length, so token accounting is uniform.

use super::{
    content_seed, BackendError, ProposeContext, Proposer, StepProposal, Verifier, VerifierScore,
};
use crate::trajectory::{GenerationStep, Trajectory};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic tree of the given depth; every step at `depth - 1` is
/// terminal.
#[derive(Debug, Clone)]
pub struct ScriptedTask {
    depth: u32,
    vocab: u32,
}

impl ScriptedTask {
    pub fn new(depth: u32, vocab: u32) -> Result<Self, BackendError> {
        if depth == 0 {
            return Err(BackendError::InvalidTask("depth must be >= 1".into()));
        }
        if vocab == 0 || vocab > 1000 {
            return Err(BackendError::InvalidTask(format!(
                "vocabulary size must be in 1..=1000 (got {vocab})"
            )));
        }
        Ok(Self { depth, vocab })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

impl Proposer for ScriptedTask {
    fn propose_step(
        &self,
        trajectory: &Trajectory,
        ctx: &ProposeContext,
    ) -> Result<StepProposal, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.derived_seed(trajectory));
        let word = rng.gen_range(0..self.vocab);
        let text = format!("t{word:03}");
        let is_terminal = trajectory.depth() + 1 >= self.depth as usize;
        let tokens = text.chars().count() as u64;
        Ok(StepProposal::of(GenerationStep::new(text, tokens, is_terminal)))
    }
}

/// Content-hash scorer: uniform in [0,1), pure in the trajectory bytes.
#[derive(Debug, Clone)]
pub struct ScriptedVerifier {
    salt: u64,
}

impl ScriptedVerifier {
    pub fn new(salt: u64) -> Self {
        Self { salt }
    }
}

impl Verifier for ScriptedVerifier {
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError> {
        let h = content_seed(self.salt, &trajectory.prompt_id, &trajectory.steps);
        // Top 53 bits to a double in [0,1).
        let value = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        Ok(VerifierScore::scalar(value))
    }
}
