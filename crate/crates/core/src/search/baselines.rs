//! Reference strategies: an independently coded beam search used as an
//! equivalence oracle, best-of-n sampling, and a diverse-subtree search
//! that partitions the sample budget across independent searches.

use super::{run_search, SearchError, SearchResult};
use crate::backends::{BackendError, ProposeContext, Proposer, Verifier};
use crate::config::{ConfigError, SearchConfig};
use crate::ledger::CostLedger;
use crate::trajectory::{Trajectory, TrajectoryStatus};
use rayon::prelude::*;

/// Step-level beam search, written without the engine's cycle machinery:
/// at each depth every frontier beam fans out into `branch_factor`
/// children, all children are scored, and the top `beam_width` open ones
/// survive. Selection extracts maxima one at a time instead of sorting, so
/// agreement with the engine at `g = 1` is evidence for both.
pub fn reference_beam_search(
    config: &SearchConfig,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    prompt_id: &str,
) -> Result<SearchResult, SearchError> {
    let config = SearchConfig { granularity: 1, ..config.clone() }.validate()?;
    let width = config.beam_width as usize;

    let mut frontier: Vec<Trajectory> =
        (0..width).map(|_| Trajectory::new(prompt_id)).collect();
    let mut finished: Vec<Trajectory> = Vec::new();
    let mut every_scored: Vec<Trajectory> = Vec::new();
    let mut depth_scores: Vec<Vec<f64>> = Vec::new();
    let mut ledger = CostLedger::default();
    let mut abort: Option<BackendError> = None;

    'depths: for depth in 0..config.max_cycles {
        if frontier.is_empty() {
            break;
        }
        let mut pool: Vec<Trajectory> = Vec::new();
        for (b, parent) in frontier.iter().enumerate() {
            for j in 0..config.branch_factor {
                let ctx = ProposeContext::new(config.seed, depth, b as u32, j);
                let proposal = match proposer.propose_step(parent, &ctx) {
                    Ok(p) => p,
                    Err(e) => {
                        abort = Some(e);
                        break 'depths;
                    }
                };
                ledger.record_step(proposal.step.token_count);
                let mut child = parent.clone();
                child.push_step(proposal.step);
                if proposal.hit_token_cap && child.is_active() {
                    child.status = TrajectoryStatus::Truncated;
                }
                pool.push(child);
            }
        }
        let mut scores = Vec::with_capacity(pool.len());
        for candidate in &mut pool {
            let score = match verifier.score(candidate) {
                Ok(s) => s,
                Err(e) => {
                    abort = Some(e);
                    break 'depths;
                }
            };
            ledger.verifier_calls += 1;
            candidate.score_history.push(score.value);
            scores.push(score.value);
        }
        ledger.cycles_executed += 1;
        depth_scores.push(scores.clone());
        every_scored.extend(pool.iter().cloned());

        let mut open: Vec<(Trajectory, f64)> = Vec::new();
        for (candidate, score) in pool.into_iter().zip(scores) {
            if candidate.is_active() {
                open.push((candidate, score));
            } else {
                finished.push(candidate);
            }
        }
        let quota = width.saturating_sub(finished.len());
        let mut next = Vec::with_capacity(quota);
        while next.len() < quota && !open.is_empty() {
            let mut best = 0;
            for k in 1..open.len() {
                if open[k].1 > open[best].1 {
                    best = k;
                }
            }
            next.push(open.remove(best).0);
        }
        frontier = next;
    }

    let result = |mut survivors: Vec<Trajectory>, truncate: bool| {
        if truncate {
            for s in &mut survivors {
                if s.is_active() {
                    s.status = TrajectoryStatus::Truncated;
                }
            }
        }
        survivors.extend(finished);
        SearchResult {
            final_candidates: survivors,
            all_candidates: every_scored,
            ledger,
            per_cycle_scores: depth_scores,
        }
    };
    if let Some(source) = abort {
        return Err(SearchError::Backend { source, partial: Box::new(result(frontier, false)) });
    }
    if ledger.verifier_calls == 0 {
        return Err(SearchError::NoCandidates);
    }
    Ok(result(frontier, true))
}

/// `n` independent rollouts of at most `max_steps` steps, each scored once
/// after it finishes. Rollout `r` draws the seeds the engine would use for
/// beam `r` of cycle 0, so a single-cycle whole-solution search with
/// `beam_width = n`, `branch_factor = 1` replays it exactly.
pub fn best_of_n(
    n: u32,
    max_steps: u32,
    seed: u64,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    prompt_id: &str,
) -> Result<SearchResult, SearchError> {
    if n == 0 {
        return Err(ConfigError::NonPositive { field: "n", value: 0 }.into());
    }
    if max_steps == 0 {
        return Err(ConfigError::NonPositive { field: "max_steps", value: 0 }.into());
    }

    let rollouts: Vec<(Trajectory, CostLedger, Option<BackendError>)> = (0..n)
        .into_par_iter()
        .map(|r| {
            let ctx = ProposeContext::new(seed, 0, r, 0);
            let mut rollout = Trajectory::new(prompt_id);
            let mut delta = CostLedger::default();
            while rollout.is_active() && (rollout.depth() as u32) < max_steps {
                match proposer.propose_step(&rollout, &ctx) {
                    Ok(proposal) => {
                        delta.record_step(proposal.step.token_count);
                        rollout.push_step(proposal.step);
                        if proposal.hit_token_cap && rollout.is_active() {
                            rollout.status = TrajectoryStatus::Truncated;
                        }
                    }
                    Err(e) => return (rollout, delta, Some(e)),
                }
            }
            match verifier.score(&rollout) {
                Ok(score) => {
                    rollout.score_history.push(score.value);
                    delta.verifier_calls += 1;
                    (rollout, delta, None)
                }
                Err(e) => (rollout, delta, Some(e)),
            }
        })
        .collect();

    let mut ledger = CostLedger::default();
    let mut scored: Vec<Trajectory> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut first_error: Option<BackendError> = None;
    for (rollout, delta, error) in rollouts {
        ledger.absorb(delta);
        match error {
            None => {
                scores.push(rollout.last_score().expect("scored rollout"));
                scored.push(rollout);
            }
            Some(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    let all_candidates = scored.clone();
    let build = |mut finals: Vec<Trajectory>, all: Vec<Trajectory>, ledger: CostLedger, truncate: bool| {
        if truncate {
            for rollout in &mut finals {
                if rollout.is_active() {
                    rollout.status = TrajectoryStatus::Truncated;
                }
            }
        }
        SearchResult {
            final_candidates: finals,
            all_candidates: all,
            ledger,
            per_cycle_scores: vec![scores.clone()],
        }
    };
    if let Some(source) = first_error {
        return Err(SearchError::Backend {
            source,
            partial: Box::new(build(scored, all_candidates, ledger, false)),
        });
    }
    ledger.cycles_executed = 1;
    Ok(build(scored, all_candidates, ledger, true))
}

/// Splits an `n`-candidate budget into `n / subtree_width` independent
/// searches of width `subtree_width` each (beam width `subtree_width /
/// branch_factor`) and unions their results. Subtrees stay diverse because
/// each one's beams occupy a disjoint range of seed-derivation indices; a
/// single subtree covering the whole budget is therefore the plain engine
/// run, bit for bit.
pub fn dvts(
    n: u32,
    subtree_width: u32,
    config: &SearchConfig,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    prompt_id: &str,
) -> Result<SearchResult, SearchError> {
    if n == 0 {
        return Err(ConfigError::NonPositive { field: "n", value: 0 }.into());
    }
    if subtree_width == 0 || n % subtree_width != 0 {
        return Err(SearchError::BadSubtreeWidth { n, subtree_width });
    }
    let sub_config = config.clone().with_budget(subtree_width)?;
    let beams_per_tree = sub_config.beam_width;
    let trees = n / subtree_width;

    let outcomes: Vec<Result<SearchResult, SearchError>> = (0..trees)
        .into_par_iter()
        .map(|t| run_search(&sub_config, proposer, verifier, prompt_id, t * beams_per_tree))
        .collect();

    let mut merged = SearchResult::default();
    let mut first_error: Option<BackendError> = None;
    for outcome in outcomes {
        let piece = match outcome {
            Ok(result) => result,
            Err(SearchError::Backend { source, partial }) => {
                if first_error.is_none() {
                    first_error = Some(source);
                }
                *partial
            }
            Err(other) => return Err(other),
        };
        merged.final_candidates.extend(piece.final_candidates);
        merged.all_candidates.extend(piece.all_candidates);
        merged.ledger.absorb(piece.ledger);
        merged.per_cycle_scores.extend(piece.per_cycle_scores);
    }
    match first_error {
        Some(source) => Err(SearchError::Backend { source, partial: Box::new(merged) }),
        None => Ok(merged),
    }
}
