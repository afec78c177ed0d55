//! The granularity-parameterised search engine and its baselines.
//!
//! One cycle advances every surviving beam by `granularity` steps: an
//! Extend phase of `g - 1` steps per beam, a Branch phase of `branch_factor`
//! single-step continuations per beam, and a Verify&Select barrier that
//! scores the pooled candidates and retains the top `beam_width`. At
//! `g = 1` the Extend phase is empty and the engine is a step-level beam
//! search; with `g` covering the whole solution and a single cycle, every
//! candidate is a full rollout scored once, which is best-of-n.

mod baselines;
mod select;

pub use baselines::{best_of_n, dvts, reference_beam_search};
pub use select::verify_select;

use crate::backends::{BackendError, ProposeContext, Proposer, Verifier};
use crate::config::{ConfigError, SearchConfig};
use crate::ledger::CostLedger;
use crate::trajectory::{Trajectory, TrajectoryStatus};
use rayon::prelude::*;
use thiserror::Error;

/// Everything a finished (or aborted) search knows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchResult {
    /// Survivors of the last Verify&Select followed by every frozen
    /// candidate in freeze order. Survivors still active at the cycle cap
    /// are marked Truncated.
    pub final_candidates: Vec<Trajectory>,
    /// Snapshot of every candidate at the moment it was scored, in scoring
    /// order.
    pub all_candidates: Vec<Trajectory>,
    pub ledger: CostLedger,
    /// Pool score vectors, one per cycle, in pool order.
    pub per_cycle_scores: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(#[from] ConfigError),
    /// A backend call failed after its own retries. The partial result
    /// holds all work completed before the failure (ledger included), with
    /// candidate statuses left as they were.
    #[error("backend failure: {source}")]
    Backend {
        source: BackendError,
        partial: Box<SearchResult>,
    },
    #[error("no candidates reached verification")]
    NoCandidates,
    #[error("subtree width {subtree_width} must divide n={n}")]
    BadSubtreeWidth { n: u32, subtree_width: u32 },
}

/// Runs the search to completion: cycles of Extend, Branch, and
/// Verify&Select until every candidate is Completed or Truncated, or
/// `max_cycles` cycles have run. Candidates that finish mid-cycle are
/// scored once at that cycle's barrier and then frozen; a frozen
/// candidate's beam slot is not refilled.
pub fn vg_search(
    config: &SearchConfig,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    prompt_id: &str,
) -> Result<SearchResult, SearchError> {
    run_search(config, proposer, verifier, prompt_id, 0)
}

/// Engine body. `beam_offset` shifts the beam indices used in seed
/// derivation so independent subtrees explore disjoint sample paths while a
/// single-subtree run stays bit-identical to `vg_search`.
pub(crate) fn run_search(
    config: &SearchConfig,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    prompt_id: &str,
    beam_offset: u32,
) -> Result<SearchResult, SearchError> {
    let config = config.clone().validate()?;
    let slots = config.beam_width as usize;

    let mut beams: Vec<Trajectory> =
        (0..slots).map(|_| Trajectory::new(prompt_id)).collect();
    let mut frozen: Vec<Trajectory> = Vec::new();
    let mut all_candidates: Vec<Trajectory> = Vec::new();
    let mut per_cycle_scores: Vec<Vec<f64>> = Vec::new();
    let mut ledger = CostLedger::default();
    let mut verified = false;

    for cycle in 0..config.max_cycles {
        if beams.is_empty() {
            break;
        }

        // Extend: each beam takes up to g-1 steps, stopping early if it
        // completes or hits the token cap.
        let extended: Vec<(Trajectory, CostLedger, Option<BackendError>)> = beams
            .into_par_iter()
            .enumerate()
            .map(|(b, mut beam)| {
                let mut delta = CostLedger::default();
                let ctx =
                    ProposeContext::new(config.seed, cycle, beam_offset + b as u32, 0);
                for _ in 1..config.granularity {
                    if !beam.is_active() {
                        break;
                    }
                    match proposer.propose_step(&beam, &ctx) {
                        Ok(proposal) => {
                            delta.record_step(proposal.step.token_count);
                            beam.push_step(proposal.step);
                            if proposal.hit_token_cap && beam.is_active() {
                                beam.status = TrajectoryStatus::Truncated;
                            }
                        }
                        Err(e) => return (beam, delta, Some(e)),
                    }
                }
                (beam, delta, None)
            })
            .collect();
        let mut first_error = None;
        beams = Vec::with_capacity(extended.len());
        for (beam, delta, error) in extended {
            ledger.absorb(delta);
            if first_error.is_none() {
                first_error = error;
            }
            beams.push(beam);
        }
        if let Some(source) = first_error {
            return Err(SearchError::Backend {
                source,
                partial: Box::new(assemble(beams, frozen, all_candidates, ledger, per_cycle_scores, false)),
            });
        }

        // Branch: every still-active beam fans out into branch_factor
        // one-step continuations; beams that froze during Extend pass
        // through to the pool so the barrier scores them once.
        let branched: Vec<(Vec<Trajectory>, CostLedger, Option<BackendError>)> = beams
            .par_iter()
            .enumerate()
            .map(|(b, beam)| {
                let mut delta = CostLedger::default();
                if !beam.is_active() {
                    return (vec![beam.clone()], delta, None);
                }
                let mut children = Vec::with_capacity(config.branch_factor as usize);
                for j in 0..config.branch_factor {
                    let ctx =
                        ProposeContext::new(config.seed, cycle, beam_offset + b as u32, j);
                    match proposer.propose_step(beam, &ctx) {
                        Ok(proposal) => {
                            delta.record_step(proposal.step.token_count);
                            let mut child = beam.clone();
                            child.push_step(proposal.step);
                            if proposal.hit_token_cap && child.is_active() {
                                child.status = TrajectoryStatus::Truncated;
                            }
                            children.push(child);
                        }
                        Err(e) => return (children, delta, Some(e)),
                    }
                }
                (children, delta, None)
            })
            .collect();
        let mut pool: Vec<Trajectory> = Vec::new();
        let mut first_error = None;
        for (children, delta, error) in branched {
            ledger.absorb(delta);
            if first_error.is_none() {
                first_error = error;
            }
            pool.extend(children);
        }
        if let Some(source) = first_error {
            return Err(SearchError::Backend {
                source,
                partial: Box::new(assemble(beams, frozen, all_candidates, ledger, per_cycle_scores, false)),
            });
        }

        // Verify&Select barrier: score the pool, snapshot it, freeze
        // finished candidates, and keep the top scorers among the rest.
        let scored: Vec<(Trajectory, f64, Option<BackendError>)> = pool
            .into_par_iter()
            .map(|mut candidate| match verifier.score(&candidate) {
                Ok(score) => {
                    candidate.score_history.push(score.value);
                    (candidate, score.value, None)
                }
                Err(e) => (candidate, f64::NAN, Some(e)),
            })
            .collect();
        let mut pool = Vec::with_capacity(scored.len());
        let mut scores = Vec::with_capacity(scored.len());
        let mut first_error = None;
        for (candidate, score, error) in scored {
            if error.is_none() {
                ledger.verifier_calls += 1;
                pool.push(candidate);
                scores.push(score);
            } else if first_error.is_none() {
                first_error = error;
            }
        }
        if let Some(source) = first_error {
            return Err(SearchError::Backend {
                source,
                partial: Box::new(assemble(beams, frozen, all_candidates, ledger, per_cycle_scores, false)),
            });
        }

        verified = true;
        ledger.cycles_executed += 1;
        per_cycle_scores.push(scores.clone());
        all_candidates.extend(pool.iter().cloned());

        let mut active = Vec::new();
        let mut active_scores = Vec::new();
        for (candidate, score) in pool.into_iter().zip(scores) {
            if candidate.is_active() {
                active.push(candidate);
                active_scores.push(score);
            } else {
                frozen.push(candidate);
            }
        }
        let capacity = slots.saturating_sub(frozen.len());
        beams = verify_select(&active, &active_scores, capacity);
    }

    if !verified {
        return Err(SearchError::NoCandidates);
    }
    Ok(assemble(beams, frozen, all_candidates, ledger, per_cycle_scores, true))
}

/// Builds the result from loop state. Completed runs mark still-active
/// survivors Truncated (the cycle cap is a length cap); aborted runs leave
/// statuses untouched.
fn assemble(
    mut survivors: Vec<Trajectory>,
    frozen: Vec<Trajectory>,
    all_candidates: Vec<Trajectory>,
    ledger: CostLedger,
    per_cycle_scores: Vec<Vec<f64>>,
    completed: bool,
) -> SearchResult {
    if completed {
        for survivor in &mut survivors {
            if survivor.is_active() {
                survivor.status = TrajectoryStatus::Truncated;
            }
        }
    }
    survivors.extend(frozen);
    SearchResult {
        final_candidates: survivors,
        all_candidates,
        ledger,
        per_cycle_scores,
    }
}
