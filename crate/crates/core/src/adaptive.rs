//! Accuracy tables keyed by (granularity, difficulty, budget) and the
//! adaptive granularity selectors built on top of them: compute
//! minimization with a parity tolerance, accuracy maximization, the
//! largest granularity retaining a fraction of baseline accuracy, and
//! validation-subset convergence curves.

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use thiserror::Error;

/// Bucket used when a dataset carries no difficulty labels.
pub const DEFAULT_DIFFICULTY: &str = "all";

/// Fraction of baseline accuracy a granularity must retain to count as
/// effective.
pub const DEFAULT_RETENTION: f64 = 0.95;

#[derive(Debug, Error)]
pub enum AdaptiveError {
    #[error("no baseline (g=1) runs for difficulty {difficulty:?} at n={n}")]
    MissingBaseline { difficulty: String, n: u32 },
    #[error("missing accuracy cell (g={g}, difficulty {difficulty:?}, n={n})")]
    MissingCell { g: u32, difficulty: String, n: u32 },
    #[error("subset size {size} exceeds validation pool size {pool}")]
    SubsetTooLarge { size: usize, pool: usize },
    #[error("accuracy table row {row} is invalid: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error("failed to read or write an accuracy table: {0}")]
    Csv(#[from] csv::Error),
}

/// One graded validation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationRun {
    pub g: u32,
    pub difficulty: String,
    pub n: u32,
    pub correct: bool,
}

impl ValidationRun {
    pub fn new(g: u32, difficulty: &str, n: u32, correct: bool) -> Self {
        Self { g, difficulty: difficulty.to_string(), n, correct }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct CellStats {
    correct: u64,
    total: u64,
}

/// Empirical accuracy per (g, difficulty, n) cell with sample counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccuracyTable {
    cells: BTreeMap<(u32, String, u32), CellStats>,
}

impl AccuracyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, g: u32, difficulty: &str, n: u32, correct: bool) {
        let cell = self.cells.entry((g, difficulty.to_string(), n)).or_default();
        cell.total += 1;
        cell.correct += u64::from(correct);
    }

    fn cell(&self, g: u32, difficulty: &str, n: u32) -> Option<CellStats> {
        self.cells.get(&(g, difficulty.to_string(), n)).copied()
    }

    pub fn accuracy(&self, g: u32, difficulty: &str, n: u32) -> Option<f64> {
        self.cell(g, difficulty, n).map(|c| c.correct as f64 / c.total as f64)
    }

    pub fn samples(&self, g: u32, difficulty: &str, n: u32) -> Option<u64> {
        self.cell(g, difficulty, n).map(|c| c.total)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Distinct (difficulty, n) slices present in the table.
    pub fn slices(&self) -> Vec<(String, u32)> {
        let mut slices: Vec<(String, u32)> =
            self.cells.keys().map(|(_, d, n)| (d.clone(), *n)).collect();
        slices.sort();
        slices.dedup();
        slices
    }

    /// Distinct granularities present in the table.
    pub fn granularities(&self) -> Vec<u32> {
        let mut gs: Vec<u32> = self.cells.keys().map(|(g, _, _)| *g).collect();
        gs.sort_unstable();
        gs.dedup();
        gs
    }
}

/// Aggregates graded runs into a table, requiring a g=1 baseline for
/// every (difficulty, n) slice that appears.
pub fn build_accuracy_table(runs: &[ValidationRun]) -> Result<AccuracyTable, AdaptiveError> {
    let mut table = AccuracyTable::new();
    for run in runs {
        table.record(run.g, &run.difficulty, run.n, run.correct);
    }
    for (difficulty, n) in table.slices() {
        if table.cell(1, &difficulty, n).is_none() {
            return Err(AdaptiveError::MissingBaseline { difficulty, n });
        }
    }
    Ok(table)
}

/// Largest granularity whose whole prefix keeps accuracy within
/// `epsilon` of the g=1 baseline. The scan stops at the first violation;
/// missing cells violate. Returns 1 when even the baseline cell is
/// absent.
pub fn cm_g_select(
    table: &AccuracyTable,
    difficulty: &str,
    n: u32,
    epsilon: f64,
    g_max: u32,
) -> u32 {
    let Some(baseline) = table.accuracy(1, difficulty, n) else {
        return 1;
    };
    let mut best = 1;
    for g in 2..=g_max {
        match table.accuracy(g, difficulty, n) {
            Some(acc) if acc >= baseline - epsilon => best = g,
            _ => break,
        }
    }
    best
}

/// Granularity with the highest accuracy; ties go to the larger g (same
/// accuracy at lower cost). Every cell in 1..=g_max must be present.
pub fn am_g_select(
    table: &AccuracyTable,
    difficulty: &str,
    n: u32,
    g_max: u32,
) -> Result<u32, AdaptiveError> {
    for g in 1..=g_max {
        if table.cell(g, difficulty, n).is_none() {
            return Err(AdaptiveError::MissingCell { g, difficulty: difficulty.to_string(), n });
        }
    }
    Ok(am_over_present(table, difficulty, n, g_max))
}

/// Argmax over whichever cells exist, ties toward larger g; 1 when no
/// cell exists. Shared by the strict selector and convergence sampling,
/// where small subsets legitimately miss cells.
fn am_over_present(table: &AccuracyTable, difficulty: &str, n: u32, g_max: u32) -> u32 {
    let mut best = (1u32, f64::NEG_INFINITY);
    for g in 1..=g_max {
        if let Some(acc) = table.accuracy(g, difficulty, n) {
            if acc >= best.1 {
                best = (g, acc);
            }
        }
    }
    best.0
}

/// Largest granularity (not necessarily prefix-contiguous) retaining at
/// least `retention` of the baseline accuracy. A zero baseline makes the
/// threshold vacuous, so g_max wins.
pub fn largest_effective_g(
    table: &AccuracyTable,
    difficulty: &str,
    n: u32,
    retention: f64,
    g_max: u32,
) -> Result<u32, AdaptiveError> {
    let mut accuracies = Vec::with_capacity(g_max as usize);
    for g in 1..=g_max {
        let acc = table.accuracy(g, difficulty, n).ok_or(AdaptiveError::MissingCell {
            g,
            difficulty: difficulty.to_string(),
            n,
        })?;
        accuracies.push(acc);
    }
    let threshold = retention * accuracies[0];
    let mut chosen = 1;
    for (offset, acc) in accuracies.iter().enumerate() {
        if *acc >= threshold {
            chosen = offset as u32 + 1;
        }
    }
    Ok(chosen)
}

/// Which adaptive selector drives a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GranularityStrategy {
    /// Prefix scan preserving baseline accuracy within epsilon.
    ComputeMinimizing { epsilon: f64 },
    /// Plain accuracy argmax.
    AccuracyMaximizing,
}

/// For each subset size, samples that many validation runs without
/// replacement, selects g* on the subset, and reports the held-out
/// test-table accuracy at that g*. Size 0 is the g=1 baseline.
#[allow(clippy::too_many_arguments)]
pub fn convergence_curve(
    pool: &[ValidationRun],
    subset_sizes: &[usize],
    strategy: GranularityStrategy,
    test_table: &AccuracyTable,
    difficulty: &str,
    n: u32,
    g_max: u32,
    seed: u64,
) -> Result<Vec<(usize, f64)>, AdaptiveError> {
    let mut curve = Vec::with_capacity(subset_sizes.len());
    for &size in subset_sizes {
        if size > pool.len() {
            return Err(AdaptiveError::SubsetTooLarge { size, pool: pool.len() });
        }
        let g_star = if size == 0 {
            1
        } else {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (size as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut subset = AccuracyTable::new();
            for i in index::sample(&mut rng, pool.len(), size) {
                let run = &pool[i];
                subset.record(run.g, &run.difficulty, run.n, run.correct);
            }
            match strategy {
                GranularityStrategy::ComputeMinimizing { epsilon } => {
                    cm_g_select(&subset, difficulty, n, epsilon, g_max)
                }
                GranularityStrategy::AccuracyMaximizing => {
                    am_over_present(&subset, difficulty, n, g_max)
                }
            }
        };
        let accuracy = test_table.accuracy(g_star, difficulty, n).ok_or(
            AdaptiveError::MissingCell { g: g_star, difficulty: difficulty.to_string(), n },
        )?;
        curve.push((size, accuracy));
    }
    Ok(curve)
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    g: u32,
    difficulty: String,
    n: u32,
    accuracy: f64,
    samples: u64,
}

/// Serializes a table as `g,difficulty,n,accuracy,samples` rows in key
/// order.
pub fn write_accuracy_csv<W: Write>(
    table: &AccuracyTable,
    writer: W,
) -> Result<(), AdaptiveError> {
    let mut out = csv::Writer::from_writer(writer);
    for ((g, difficulty, n), cell) in &table.cells {
        out.serialize(TableRow {
            g: *g,
            difficulty: difficulty.clone(),
            n: *n,
            accuracy: cell.correct as f64 / cell.total as f64,
            samples: cell.total,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a table written by [`write_accuracy_csv`], validating ranges.
pub fn read_accuracy_csv<R: Read>(reader: R) -> Result<AccuracyTable, AdaptiveError> {
    let mut input = csv::Reader::from_reader(reader);
    let mut table = AccuracyTable::new();
    for (row, record) in input.deserialize::<TableRow>().enumerate() {
        let record = record?;
        if !(0.0..=1.0).contains(&record.accuracy) || !record.accuracy.is_finite() {
            return Err(AdaptiveError::InvalidRow {
                row,
                reason: format!("accuracy {} outside [0, 1]", record.accuracy),
            });
        }
        if record.samples == 0 {
            return Err(AdaptiveError::InvalidRow {
                row,
                reason: "zero samples".to_string(),
            });
        }
        let correct = (record.accuracy * record.samples as f64).round() as u64;
        table.cells.insert(
            (record.g, record.difficulty, record.n),
            CellStats { correct: correct.min(record.samples), total: record.samples },
        );
    }
    Ok(table)
}
