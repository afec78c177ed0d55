//! Final-answer extraction and cross-candidate selection: boxed-answer
//! canonicalization, majority and score-weighted voting, and best-score
//! candidate picking.

use crate::trajectory::Trajectory;
use thiserror::Error;

/// Signature for swapping in a different answer normalization (symbolic
/// equivalence, task-specific parsing). The harness takes one of these;
/// [`canonicalize_answer`] is the default.
pub type Canonicalizer = fn(&str) -> Option<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("answers/scores length mismatch ({answers} answers, {scores} scores)")]
    LengthMismatch { answers: usize, scores: usize },
    #[error("cannot select from an empty candidate pool")]
    EmptyPool,
    #[error("candidate {index} has no verifier scores")]
    UnscoredCandidate { index: usize },
    #[error("empty score history")]
    EmptyHistory,
}

/// Extracts the content of the last `\boxed{...}` in `text`, with braces
/// balanced and whitespace runs collapsed to single spaces. Returns `None`
/// when there is no box, the last box never closes, or the content is
/// blank.
pub fn canonicalize_answer(text: &str) -> Option<String> {
    let marker = "\\boxed{";
    let start = text.rfind(marker)? + marker.len();
    let mut depth = 1u32;
    let mut close = None;
    for (i, c) in text[start..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    close = Some(start + i);
                    break;
                }
            }
            _ => {}
        }
    }
    let inner = &text[start..close?];
    let normalized = inner.split_whitespace().collect::<Vec<_>>().join(" ");
    if normalized.is_empty() {
        None
    } else {
        Some(normalized)
    }
}

/// Candidates sharing one canonical answer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerGroup {
    pub canonical_answer: String,
    /// (candidate index, that candidate's weight) in input order.
    pub members: Vec<(usize, f64)>,
    /// Sum of member weights: the member count under majority voting,
    /// the summed scores under weighted voting.
    pub total_weight: f64,
}

fn grouped(answers: &[Option<String>], weights: &[f64]) -> Vec<AnswerGroup> {
    let mut groups: Vec<AnswerGroup> = Vec::new();
    for (index, answer) in answers.iter().enumerate() {
        let Some(answer) = answer else { continue };
        let weight = weights[index];
        match groups.iter_mut().find(|group| group.canonical_answer == *answer) {
            Some(group) => {
                group.members.push((index, weight));
                group.total_weight += weight;
            }
            None => groups.push(AnswerGroup {
                canonical_answer: answer.clone(),
                members: vec![(index, weight)],
                total_weight: weight,
            }),
        }
    }
    groups
}

/// Groups candidates by canonical answer, weighting members by their
/// scores. Candidates without an answer are skipped. Groups come back in
/// first-occurrence order.
pub fn group_answers(
    answers: &[Option<String>],
    scores: &[f64],
) -> Result<Vec<AnswerGroup>, AggregateError> {
    if answers.len() != scores.len() {
        return Err(AggregateError::LengthMismatch {
            answers: answers.len(),
            scores: scores.len(),
        });
    }
    Ok(grouped(answers, scores))
}

/// Groups in first-occurrence order win ties automatically: a later group
/// must be strictly heavier to displace the current winner.
fn heaviest(groups: Vec<AnswerGroup>) -> Option<String> {
    let mut winner: Option<AnswerGroup> = None;
    for group in groups {
        let beats = winner.as_ref().is_none_or(|w| group.total_weight > w.total_weight);
        if beats {
            winner = Some(group);
        }
    }
    winner.map(|g| g.canonical_answer)
}

/// Most frequent answer; ties go to the answer that appeared first.
/// `None` entries do not vote; all-`None` input yields `None`.
pub fn majority_vote(answers: &[Option<String>]) -> Option<String> {
    heaviest(grouped(answers, &vec![1.0; answers.len()]))
}

/// Answer whose members' scores sum highest; ties go to the answer that
/// appeared first, as in majority voting.
pub fn weighted_vote(
    answers: &[Option<String>],
    scores: &[f64],
) -> Result<Option<String>, AggregateError> {
    Ok(heaviest(group_answers(answers, scores)?))
}

/// What counts as a candidate's score when picking the single best one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    /// Most recent verifier score.
    Final,
    /// Sum of the whole score history.
    Cumulative,
}

/// The highest-scoring candidate under `mode`; ties go to the lower index.
pub fn best_score_select(
    trajectories: &[Trajectory],
    mode: ScoreMode,
) -> Result<&Trajectory, AggregateError> {
    if trajectories.is_empty() {
        return Err(AggregateError::EmptyPool);
    }
    let mut best: Option<(usize, f64)> = None;
    for (index, trajectory) in trajectories.iter().enumerate() {
        if trajectory.score_history.is_empty() {
            return Err(AggregateError::UnscoredCandidate { index });
        }
        let key = match mode {
            ScoreMode::Final => *trajectory.score_history.last().unwrap(),
            ScoreMode::Cumulative => trajectory.score_history.iter().sum(),
        };
        if best.is_none_or(|(_, top)| key > top) {
            best = Some((index, key));
        }
    }
    Ok(&trajectories[best.unwrap().0])
}

/// Selection score of a verified prefix: its most recent entry.
pub fn last_score(history: &[f64]) -> Result<f64, AggregateError> {
    history.last().copied().ok_or(AggregateError::EmptyHistory)
}
