//! Stochastic and composite verifier wrappers.

use super::{content_seed, BackendError, Verifier, VerifierScore};
use crate::trajectory::Trajectory;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// The no-signal verifier: a uniform random score in [0,1) per scoring
/// event, in place of whatever verifier would otherwise run.
///
/// Scores are keyed by (wrapper seed, trajectory identity), so a given
/// trajectory draws the same score every time it is presented, while any
/// change to its content draws a fresh one. The trajectory under a growing
/// search changes every cycle, which yields one independent draw per
/// verification event.
#[derive(Debug, Clone)]
pub struct NoisyVerifier {
    seed: u64,
}

impl NoisyVerifier {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl Verifier for NoisyVerifier {
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(content_seed(
            self.seed,
            &trajectory.prompt_id,
            &trajectory.steps,
        ));
        Ok(VerifierScore::scalar(rng.gen::<f64>()))
    }
}

/// Imperfect verifier: passes the inner score through, but with probability
/// `flip_probability` reports `1 - score` instead. The flip decision is
/// seeded per trajectory identity, so runs stay deterministic.
pub struct FlipVerifier {
    inner: Arc<dyn Verifier>,
    flip_probability: f64,
    seed: u64,
}

impl FlipVerifier {
    pub fn new(inner: Arc<dyn Verifier>, flip_probability: f64, seed: u64) -> Result<Self, BackendError> {
        if !(0.0..=1.0).contains(&flip_probability) {
            return Err(BackendError::InvalidTask(format!(
                "flip probability must be in [0,1] (got {flip_probability})"
            )));
        }
        Ok(Self { inner, flip_probability, seed })
    }
}

impl Verifier for FlipVerifier {
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError> {
        let inner = self.inner.score(trajectory)?;
        let mut rng = ChaCha8Rng::seed_from_u64(content_seed(
            // Salt the seed so flips do not correlate with a noisy verifier
            // keyed by the same run seed.
            self.seed ^ 0x464c_4950,
            &trajectory.prompt_id,
            &trajectory.steps,
        ));
        let value =
            if rng.gen_bool(self.flip_probability) { 1.0 - inner.value } else { inner.value };
        Ok(VerifierScore { value, step_scores: inner.step_scores })
    }
}

/// Arithmetic mean of the member scores.
pub struct EnsembleVerifier {
    members: Vec<Arc<dyn Verifier>>,
}

impl EnsembleVerifier {
    pub fn new(members: Vec<Arc<dyn Verifier>>) -> Result<Self, BackendError> {
        if members.is_empty() {
            return Err(BackendError::InvalidTask("ensemble needs at least one member".into()));
        }
        Ok(Self { members })
    }
}

impl Verifier for EnsembleVerifier {
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError> {
        let mut sum = 0.0;
        for member in &self.members {
            sum += member.score(trajectory)?.value;
        }
        Ok(VerifierScore::scalar(sum / self.members.len() as f64))
    }
}
