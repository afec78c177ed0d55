//! Score-stability profiling: how much verifier scores drift across a
//! fixed step gap, normalized by the observed score range.

use super::sweep::{build_question, execute, load_dataset};
use super::{ExperimentSpec, HarnessError};
use crate::backends::mix_seed;
use serde::Serialize;
use std::io::Write;

const BIN_COUNT: usize = 20;
const STABLE_THRESHOLD: f64 = 0.01;

/// Distribution of |score[i+k] - score[i]| / range over all histories.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProfile {
    pub k: usize,
    /// Counts over 20 equal bins spanning [0, 1]; a delta of exactly the
    /// full range lands in the last bin.
    pub bins: Vec<u64>,
    /// Fraction of deltas below 1% of the score range.
    pub fraction_below_1pct: f64,
    pub deltas_counted: u64,
    /// Histories shorter than k+1 entries, which contribute nothing.
    pub skipped_histories: u64,
    /// Observed max - min across every score; 0 when all scores are equal.
    pub score_range: f64,
}

pub fn profile_score_stability(histories: &[Vec<f64>], k: usize) -> StabilityProfile {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for history in histories {
        for &score in history {
            lo = lo.min(score);
            hi = hi.max(score);
        }
    }
    let range = if hi > lo { hi - lo } else { 0.0 };

    let mut bins = vec![0u64; BIN_COUNT];
    let mut below = 0u64;
    let mut total = 0u64;
    let mut skipped = 0u64;
    for history in histories {
        if history.len() < k + 1 {
            skipped += 1;
            continue;
        }
        for i in 0..history.len() - k {
            let delta = (history[i + k] - history[i]).abs();
            let normalized = if range > 0.0 { delta / range } else { 0.0 };
            bins[((normalized * BIN_COUNT as f64) as usize).min(BIN_COUNT - 1)] += 1;
            below += u64::from(normalized < STABLE_THRESHOLD);
            total += 1;
        }
    }
    StabilityProfile {
        k,
        bins,
        fraction_below_1pct: if total == 0 { 0.0 } else { below as f64 / total as f64 },
        deltas_counted: total,
        skipped_histories: skipped,
        score_range: range,
    }
}

#[derive(Serialize)]
struct BinRow {
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

/// Histogram rows `bin_lo,bin_hi,count` for plotting.
pub fn write_stability_csv<W: Write>(
    profile: &StabilityProfile,
    writer: W,
) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(writer);
    for (b, &count) in profile.bins.iter().enumerate() {
        out.serialize(BinRow {
            bin_lo: b as f64 / BIN_COUNT as f64,
            bin_hi: (b + 1) as f64 / BIN_COUNT as f64,
            count,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Runs the first grid cell of the spec over all questions and profiles
/// the final candidates' score histories at gap `k`. Granularity 1 gives
/// per-step histories.
pub fn run_stability(spec: &ExperimentSpec, k: usize) -> Result<StabilityProfile, HarnessError> {
    let dataset = load_dataset(spec)?;
    let g = spec.effective_granularities()[0];
    let n = spec.sweep.budgets[0];
    let mut histories = Vec::new();
    for qid in 0..spec.experiment.questions {
        let question = build_question(spec, qid, dataset.as_deref())?;
        let job_seed = mix_seed(spec.experiment.seed, &[g as u64, n as u64, qid as u64]);
        let result = execute(spec, &question, g, n, job_seed)?;
        histories.extend(result.final_candidates.iter().map(|t| t.score_history.clone()));
    }
    Ok(profile_score_stability(&histories, k))
}
