//! Character-typing testbed: a random generator tries to reproduce a fixed
//! target string one character per step, under a perfect prefix verifier.
//!
//! Success of a g-character segment has probability A^-g, so expected
//! attempts per segment grow exponentially in g. That makes this the
//! sharpest desk-scale probe of how verification frequency prunes errors.

use super::{BackendError, ProposeContext, Proposer, StepProposal, Verifier, VerifierScore};
use crate::trajectory::{GenerationStep, Trajectory};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Target-string reproduction task over an `alphabet_size`-letter alphabet.
#[derive(Debug, Clone)]
pub struct ImtTask {
    alphabet_size: u32,
    target: String,
}

const MAX_ALPHABET: u32 = 26;

impl ImtTask {
    /// The alphabet is the first `alphabet_size` lowercase letters. The
    /// degenerate one-letter alphabet is allowed (every draw is the correct
    /// character); the target must be non-empty and stay within the
    /// alphabet.
    pub fn new(alphabet_size: u32, target: impl Into<String>) -> Result<Self, BackendError> {
        let target = target.into();
        if alphabet_size == 0 || alphabet_size > MAX_ALPHABET {
            return Err(BackendError::InvalidTask(format!(
                "alphabet size must be in 1..={MAX_ALPHABET} (got {alphabet_size})"
            )));
        }
        if target.is_empty() {
            return Err(BackendError::InvalidTask("target must be non-empty".into()));
        }
        let limit = (b'a' + (alphabet_size - 1) as u8) as char;
        if let Some(bad) = target.chars().find(|c| *c < 'a' || *c > limit) {
            return Err(BackendError::InvalidTask(format!(
                "target character {bad:?} outside alphabet a..={limit}"
            )));
        }
        Ok(Self { alphabet_size, target })
    }

    /// Uniformly random target of the given length.
    pub fn random_target(alphabet_size: u32, length: usize, seed: u64) -> Result<Self, BackendError> {
        if alphabet_size == 0 || alphabet_size > MAX_ALPHABET {
            return Err(BackendError::InvalidTask(format!(
                "alphabet size must be in 1..={MAX_ALPHABET} (got {alphabet_size})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target: String =
            (0..length).map(|_| (b'a' + rng.gen_range(0..alphabet_size) as u8) as char).collect();
        Self::new(alphabet_size, target)
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    fn target_len(&self) -> usize {
        self.target.chars().count()
    }
}

impl Proposer for ImtTask {
    /// Emits one character, uniformly random over the alphabet.
    ///
    /// Sibling branches draw a shared uniform base character and offset it by
    /// their branch index, so `branch_factor` siblings cover
    /// `min(branch_factor, alphabet_size)` distinct characters while each
    /// call stays marginally uniform. With `branch_factor == alphabet_size`
    /// and a perfect verifier, the correct continuation is therefore always
    /// among the branches.
    fn propose_step(
        &self,
        trajectory: &Trajectory,
        ctx: &ProposeContext,
    ) -> Result<StepProposal, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.branchless_seed(trajectory));
        let base = rng.gen_range(0..self.alphabet_size);
        let index = (base + ctx.branch % self.alphabet_size) % self.alphabet_size;
        let ch = (b'a' + index as u8) as char;
        let is_terminal = trajectory.depth() + 1 >= self.target_len();
        Ok(StepProposal::of(GenerationStep::new(ch.to_string(), 1, is_terminal)))
    }
}

impl Verifier for ImtTask {
    /// 1.0 while the typed text is a prefix of the target, else 0.0.
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError> {
        let text = trajectory.concat_text();
        let ok = self.target.starts_with(&text);
        Ok(VerifierScore::scalar(if ok { 1.0 } else { 0.0 }))
    }
}
