//! Coin-flip reasoning testbed: each step succeeds with probability `p`,
//! errors are absorbing, and the final step commits to an answer label.
//!
//! A trajectory whose steps all succeeded ends in the true label; any slip
//! dooms it to a uniformly random wrong label, so voting over candidates is
//! informative but beatable. Step texts embed an ok/err marker (the oracle
//! verifier reads it) and a short nonce so sibling branches are textually
//! distinct.

use super::{BackendError, ProposeContext, Proposer, StepProposal, Verifier, VerifierScore};
use crate::trajectory::{GenerationStep, Trajectory};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct BernoulliTreeTask {
    step_success_p: f64,
    solution_length: u32,
    answer_labels: Vec<String>,
    correct_label: String,
}

impl BernoulliTreeTask {
    pub fn new(
        step_success_p: f64,
        solution_length: u32,
        answer_labels: Vec<String>,
        correct_label: impl Into<String>,
    ) -> Result<Self, BackendError> {
        if !(step_success_p > 0.0 && step_success_p <= 1.0) {
            return Err(BackendError::InvalidTask(format!(
                "step success probability must be in (0,1] (got {step_success_p})"
            )));
        }
        if solution_length == 0 {
            return Err(BackendError::InvalidTask("solution length must be >= 1".into()));
        }
        if answer_labels.len() < 2 {
            return Err(BackendError::InvalidTask(
                "need at least two answer labels to have wrong answers".into(),
            ));
        }
        let correct_label = correct_label.into();
        if !answer_labels.contains(&correct_label) {
            return Err(BackendError::InvalidTask(format!(
                "correct label {correct_label:?} not in the answer alphabet"
            )));
        }
        Ok(Self { step_success_p, solution_length, answer_labels, correct_label })
    }

    /// Uppercase-letter answer alphabet of size `labels`, with a seeded
    /// choice of the true label.
    pub fn with_label_count(
        step_success_p: f64,
        solution_length: u32,
        labels: u32,
        seed: u64,
    ) -> Result<Self, BackendError> {
        if labels < 2 || labels > 26 {
            return Err(BackendError::InvalidTask(format!(
                "label count must be in 2..=26 (got {labels})"
            )));
        }
        let alphabet: Vec<String> =
            (0..labels).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let correct = alphabet[rng.gen_range(0..alphabet.len())].clone();
        Self::new(step_success_p, solution_length, alphabet, correct)
    }

    pub fn ground_truth(&self) -> &str {
        &self.correct_label
    }

    pub fn solution_length(&self) -> u32 {
        self.solution_length
    }

    fn step_is_correct(step_text: &str) -> bool {
        step_text.split_whitespace().nth(1) == Some("ok")
    }

    fn prefix_correct(trajectory: &Trajectory) -> bool {
        trajectory.steps.iter().all(|s| Self::step_is_correct(&s.text))
    }

    fn wrong_label(&self, rng: &mut ChaCha8Rng) -> &str {
        let wrong: Vec<&String> =
            self.answer_labels.iter().filter(|l| **l != self.correct_label).collect();
        wrong[rng.gen_range(0..wrong.len())]
    }
}

impl Proposer for BernoulliTreeTask {
    fn propose_step(
        &self,
        trajectory: &Trajectory,
        ctx: &ProposeContext,
    ) -> Result<StepProposal, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.derived_seed(trajectory));
        let position = trajectory.depth().min(self.solution_length as usize - 1);
        let ok = Self::prefix_correct(trajectory) && rng.gen_bool(self.step_success_p);
        let marker = if ok { "ok" } else { "err" };
        let nonce: u32 = rng.gen();
        let is_final = position + 1 >= self.solution_length as usize;
        let text = if is_final {
            let label = if ok { self.correct_label.as_str() } else { self.wrong_label(&mut rng) };
            format!("s{position:02} {marker} {nonce:08x} \\boxed{{{label}}}")
        } else {
            format!("s{position:02} {marker} {nonce:08x}")
        };
        let tokens = text.chars().count() as u64;
        Ok(StepProposal::of(GenerationStep::new(text, tokens, is_final)))
    }
}

impl Verifier for BernoulliTreeTask {
    /// Oracle: 1.0 iff every step so far succeeded.
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError> {
        Ok(VerifierScore::scalar(if Self::prefix_correct(trajectory) { 1.0 } else { 0.0 }))
    }
}
