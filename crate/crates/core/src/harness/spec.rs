//! TOML experiment specification: what to run, on which task, with which
//! backends, and how to account for compute.

use super::HarnessError;
use crate::config::{ConfigError, SearchConfig};
use crate::cost::CostParams;
use serde::Deserialize;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Verifier-guided search at configurable granularity.
    Vg,
    /// Step-level reference beam search (granularity pinned to 1).
    Beam,
    /// Independent full rollouts, one verification each.
    Bon,
    /// Budget split across independent verifier-guided subtrees.
    Dvts,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Vg => "vg",
            Strategy::Beam => "beam",
            Strategy::Bon => "bon",
            Strategy::Dvts => "dvts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Majority,
    Weighted,
    BestFinal,
    BestCumulative,
    /// Uniform random pick among the candidates; the floor any selector
    /// must beat.
    Random,
}

/// Which candidates vote: the final survivors (frozen ones included) or
/// every candidate ever scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteOver {
    Final,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Bernoulli,
    Imt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Synthetic,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifierKind {
    /// The task's exact verifier.
    #[default]
    Oracle,
    /// Pure seeded noise, uninformative by construction.
    Noisy,
    /// Oracle score flipped to its complement with some probability.
    Flip,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default = "default_questions")]
    pub questions: u32,
    /// Worker threads for the sweep; 0 uses the process default. Output
    /// bytes never depend on this.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_aggregation")]
    pub aggregation: Aggregation,
    #[serde(default = "default_vote_over")]
    pub vote_over: VoteOver,
}

fn default_repetitions() -> u32 {
    1
}
fn default_questions() -> u32 {
    16
}
fn default_strategy() -> Strategy {
    Strategy::Vg
}
fn default_aggregation() -> Aggregation {
    Aggregation::Weighted
}
fn default_vote_over() -> VoteOver {
    VoteOver::Final
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_granularities")]
    pub granularities: Vec<u32>,
    /// Candidate-count budgets (n); each must be divisible by the branch
    /// factor.
    #[serde(default = "default_budgets")]
    pub budgets: Vec<u32>,
    /// Total generation steps per candidate; the cycle count is
    /// ceil(total_steps / g) so every granularity spends the same step
    /// budget.
    #[serde(default = "default_total_steps")]
    pub total_steps: u32,
}

fn default_granularities() -> Vec<u32> {
    vec![1, 2, 3, 4]
}
fn default_budgets() -> Vec<u32> {
    vec![4, 16]
}
fn default_total_steps() -> u32 {
    12
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            granularities: default_granularities(),
            budgets: default_budgets(),
            total_steps: default_total_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default = "default_branch_factor")]
    pub branch_factor: u32,
    #[serde(default = "default_delimiter")]
    pub step_delimiter: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens_per_step: u32,
    /// Candidates per independent subtree (dvts only).
    #[serde(default = "default_subtree_width")]
    pub subtree_width: u32,
}

fn default_branch_factor() -> u32 {
    4
}
fn default_delimiter() -> String {
    "\n\n".to_string()
}
fn default_max_tokens() -> u32 {
    2048
}
fn default_subtree_width() -> u32 {
    4
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            branch_factor: default_branch_factor(),
            step_delimiter: default_delimiter(),
            max_tokens_per_step: default_max_tokens(),
            subtree_width: default_subtree_width(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    /// Per-step probability of staying on a correct path (bernoulli).
    #[serde(default = "default_step_success")]
    pub step_success: f64,
    /// Steps to a complete answer (bernoulli).
    #[serde(default = "default_solution_length")]
    pub solution_length: u32,
    /// Size of the answer alphabet (bernoulli).
    #[serde(default = "default_labels")]
    pub labels: u32,
    /// Branching alphabet size (imt).
    #[serde(default = "default_alphabet_size")]
    pub alphabet_size: u32,
    /// Target string length (imt).
    #[serde(default = "default_target_length")]
    pub target_length: u32,
}

fn default_step_success() -> f64 {
    0.8
}
fn default_solution_length() -> u32 {
    4
}
fn default_labels() -> u32 {
    4
}
fn default_alphabet_size() -> u32 {
    2
}
fn default_target_length() -> u32 {
    6
}

impl TaskSection {
    /// Mean tokens a step of this task actually generates, used when the
    /// cost section does not pin `avg_tokens_per_step`. Keeping the two
    /// close is what makes formula FLOPs comparable to ledger FLOPs.
    pub fn default_tokens_per_step(&self) -> f64 {
        match self.kind {
            TaskKind::Bernoulli => 16.0,
            TaskKind::Imt => 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default)]
    pub verifier: VerifierKind,
    #[serde(default = "default_flip_probability")]
    pub flip_probability: f64,
    pub proposer_url: Option<String>,
    pub verifier_url: Option<String>,
    pub model: Option<String>,
}

fn default_flip_probability() -> f64 {
    0.3
}

/// Partial cost constants; anything omitted falls back to task-aware
/// defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub avg_solution_length: Option<f64>,
    pub avg_tokens_per_step: Option<f64>,
    pub proposer_params: Option<f64>,
    pub verifier_params: Option<f64>,
    pub verifier_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// JSON-lines file of {id, prompt, answer, difficulty?} records.
    pub path: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub search: SearchSection,
    pub task: TaskSection,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub cost: CostSection,
    pub dataset: Option<DatasetSection>,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(self) -> Result<Self, HarnessError> {
        let fail = |msg: String| Err(HarnessError::Spec(msg));
        let exp = &self.experiment;
        if exp.repetitions == 0 {
            return fail("repetitions must be >= 1".into());
        }
        if exp.questions == 0 {
            return fail("questions must be >= 1".into());
        }
        if self.sweep.total_steps == 0 {
            return fail("total_steps must be >= 1".into());
        }
        if self.sweep.granularities.is_empty() {
            return fail("granularities must be non-empty".into());
        }
        if self.sweep.granularities.iter().any(|g| *g == 0) {
            return fail("granularities must all be >= 1".into());
        }
        if self.sweep.budgets.is_empty() {
            return fail("budgets must be non-empty".into());
        }
        let b2 = self.search.branch_factor;
        if b2 == 0 {
            return Err(ConfigError::NonPositive { field: "branch_factor", value: 0 }.into());
        }
        if self.search.step_delimiter.is_empty() {
            return Err(ConfigError::EmptyDelimiter.into());
        }
        for &n in &self.sweep.budgets {
            if n == 0 {
                return fail("budgets must all be >= 1".into());
            }
            if exp.strategy != Strategy::Bon && n % b2 != 0 {
                return Err(ConfigError::IndivisibleBudget { n, branch_factor: b2 }.into());
            }
            if exp.strategy == Strategy::Dvts && n % self.search.subtree_width != 0 {
                return fail(format!(
                    "budget n={n} is not divisible by subtree_width={}",
                    self.search.subtree_width
                ));
            }
        }
        if exp.strategy == Strategy::Dvts && self.search.subtree_width % b2 != 0 {
            return Err(ConfigError::IndivisibleBudget {
                n: self.search.subtree_width,
                branch_factor: b2,
            }
            .into());
        }
        let task = &self.task;
        if !(task.step_success > 0.0 && task.step_success <= 1.0) {
            return fail(format!("step_success must be in (0, 1] (got {})", task.step_success));
        }
        if task.solution_length == 0 {
            return fail("solution_length must be >= 1".into());
        }
        if !(2..=26).contains(&task.labels) {
            return fail(format!("labels must be in 2..=26 (got {})", task.labels));
        }
        if !(1..=26).contains(&task.alphabet_size) {
            return fail(format!("alphabet_size must be in 1..=26 (got {})", task.alphabet_size));
        }
        if task.target_length == 0 {
            return fail("target_length must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.backend.flip_probability) {
            return fail(format!(
                "flip_probability must be in [0, 1] (got {})",
                self.backend.flip_probability
            ));
        }
        if self.backend.kind == BackendKind::Remote && self.dataset.is_none() {
            return fail("remote backends need a [dataset] section of real prompts".into());
        }
        self.cost_params()?;
        Ok(self)
    }

    /// Granularities the sweep actually executes. Beam search verifies
    /// every step by definition and best-of-n only at the end, so those
    /// strategies pin the grid.
    pub fn effective_granularities(&self) -> Vec<u32> {
        match self.experiment.strategy {
            Strategy::Beam => vec![1],
            Strategy::Bon => vec![self.sweep.total_steps],
            Strategy::Vg | Strategy::Dvts => self.sweep.granularities.clone(),
        }
    }

    /// Cycles needed to spend the step budget at granularity g.
    pub fn cycles_for(&self, g: u32) -> u32 {
        self.sweep.total_steps.div_ceil(g)
    }

    /// The search configuration for one grid cell; beam width comes from
    /// dividing the budget across branches.
    pub fn search_config(&self, g: u32, n: u32, seed: u64) -> Result<SearchConfig, ConfigError> {
        SearchConfig {
            granularity: g,
            beam_width: 1,
            branch_factor: self.search.branch_factor,
            max_cycles: self.cycles_for(g),
            step_delimiter: self.search.step_delimiter.clone(),
            max_tokens_per_step: self.search.max_tokens_per_step,
            seed,
        }
        .with_budget(n)
    }

    /// Cost constants with task-aware fallbacks: solution length defaults
    /// to the step budget and tokens-per-step to the task's true mean.
    pub fn cost_params(&self) -> Result<CostParams, HarnessError> {
        let defaults = CostParams::default();
        Ok(CostParams {
            avg_solution_length: self
                .cost
                .avg_solution_length
                .unwrap_or(self.sweep.total_steps as f64),
            avg_tokens_per_step: self
                .cost
                .avg_tokens_per_step
                .unwrap_or_else(|| self.task.default_tokens_per_step()),
            proposer_params: self.cost.proposer_params.unwrap_or(defaults.proposer_params),
            verifier_params: self.cost.verifier_params.unwrap_or(defaults.verifier_params),
            verifier_alpha: self.cost.verifier_alpha.unwrap_or(defaults.verifier_alpha),
        }
        .validate()?)
    }
}
