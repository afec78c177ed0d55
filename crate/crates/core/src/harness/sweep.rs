//! Sweep execution: runs every (granularity, budget, repetition, question)
//! cell, grades the aggregated answers, and writes the per-question,
//! summary, and accuracy-table CSVs.

use super::spec::{
    Aggregation, BackendKind, ExperimentSpec, Strategy, TaskKind, VerifierKind, VoteOver,
};
use super::HarnessError;
use crate::adaptive::{write_accuracy_csv, AccuracyTable, DEFAULT_DIFFICULTY};
use crate::aggregate::{best_score_select, canonicalize_answer, majority_vote, weighted_vote, ScoreMode};
use crate::backends::{
    mix_seed, BernoulliTreeTask, FlipVerifier, ImtTask, NoisyVerifier, Proposer,
    ProposerEndpoint, RemoteProposer, RemoteVerifier, Verifier, VerifierEndpoint,
};
use crate::config::SearchConfig;
use crate::cost::{ledger_to_flops, total_flops, CostParams};
use crate::search::{best_of_n, dvts, reference_beam_search, vg_search, SearchResult};
use crate::trajectory::Trajectory;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::Arc;

const QUESTION_SALT: u64 = 0x5155_4553;
const JOB_SALT: u64 = 0x4a4f_42;
const PICK_SALT: u64 = 0x5049_434b;

/// One per-question record in a dataset JSON-lines file.
#[derive(Debug, Clone, Deserialize)]
pub struct DatasetQuestion {
    pub id: String,
    pub prompt: String,
    pub answer: String,
    #[serde(default)]
    pub difficulty: Option<String>,
}

/// How a trajectory's final answer is read off its text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum AnswerMode {
    /// Content of the last boxed answer marker.
    Boxed,
    /// Whitespace-stripped concatenation of all steps.
    Concatenated,
}

pub(super) fn extract_answer(trajectory: &Trajectory, mode: AnswerMode) -> Option<String> {
    match mode {
        AnswerMode::Boxed => canonicalize_answer(&trajectory.concat_text()),
        AnswerMode::Concatenated => {
            let joined: String = trajectory.concat_text().split_whitespace().collect();
            (!joined.is_empty()).then_some(joined)
        }
    }
}

/// A fully wired question: backends, ground truth, and how to read
/// answers.
pub(super) struct Question {
    pub prompt_id: String,
    pub truth: String,
    pub answer_mode: AnswerMode,
    pub proposer: Arc<dyn Proposer>,
    pub oracle: Arc<dyn Verifier>,
}

pub(super) fn load_dataset(
    spec: &ExperimentSpec,
) -> Result<Option<Vec<DatasetQuestion>>, HarnessError> {
    let Some(section) = &spec.dataset else {
        return Ok(None);
    };
    let text = fs::read_to_string(&section.path)?;
    let mut questions = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        questions.push(serde_json::from_str::<DatasetQuestion>(line)?);
    }
    if spec.backend.kind == BackendKind::Remote
        && questions.len() < spec.experiment.questions as usize
    {
        return Err(HarnessError::Spec(format!(
            "dataset {} has {} questions but the experiment needs {}",
            section.path,
            questions.len(),
            spec.experiment.questions
        )));
    }
    Ok(Some(questions))
}

pub(super) fn build_question(
    spec: &ExperimentSpec,
    qid: u32,
    dataset: Option<&[DatasetQuestion]>,
) -> Result<Question, HarnessError> {
    let q_seed = mix_seed(spec.experiment.seed, &[QUESTION_SALT, qid as u64]);
    if spec.backend.kind == BackendKind::Remote {
        let entry = dataset
            .and_then(|d| d.get(qid as usize))
            .ok_or_else(|| HarnessError::Spec(format!("no dataset entry for question {qid}")))?;
        let mut proposer_endpoint = ProposerEndpoint {
            step_delimiter: spec.search.step_delimiter.clone(),
            max_tokens_per_step: spec.search.max_tokens_per_step as u64,
            ..ProposerEndpoint::default()
        };
        if let Some(url) = &spec.backend.proposer_url {
            proposer_endpoint.url = url.clone();
        }
        if let Some(model) = &spec.backend.model {
            proposer_endpoint.model = model.clone();
        }
        let mut verifier_endpoint = VerifierEndpoint::default();
        if let Some(url) = &spec.backend.verifier_url {
            verifier_endpoint.url = url.clone();
        }
        let proposer = RemoteProposer::new(proposer_endpoint.with_env_overrides())?
            .with_prompt(entry.prompt.clone());
        let verifier = RemoteVerifier::new(verifier_endpoint.with_env_overrides())?;
        return Ok(Question {
            prompt_id: entry.id.clone(),
            truth: entry.answer.split_whitespace().collect::<Vec<_>>().join(" "),
            answer_mode: AnswerMode::Boxed,
            proposer: Arc::new(proposer),
            oracle: Arc::new(verifier),
        });
    }

    match spec.task.kind {
        TaskKind::Bernoulli => {
            let task = Arc::new(BernoulliTreeTask::with_label_count(
                spec.task.step_success,
                spec.task.solution_length,
                spec.task.labels,
                q_seed,
            )?);
            Ok(Question {
                prompt_id: format!("q{qid:04}"),
                truth: task.ground_truth().to_string(),
                answer_mode: AnswerMode::Boxed,
                proposer: task.clone(),
                oracle: task,
            })
        }
        TaskKind::Imt => {
            let task = Arc::new(ImtTask::random_target(
                spec.task.alphabet_size,
                spec.task.target_length as usize,
                q_seed,
            )?);
            Ok(Question {
                prompt_id: format!("q{qid:04}"),
                truth: task.target().to_string(),
                answer_mode: AnswerMode::Concatenated,
                proposer: task.clone(),
                oracle: task,
            })
        }
    }
}

fn wire_verifier(
    spec: &ExperimentSpec,
    oracle: Arc<dyn Verifier>,
) -> Result<Arc<dyn Verifier>, HarnessError> {
    Ok(match spec.backend.verifier {
        VerifierKind::Oracle => oracle,
        VerifierKind::Noisy => Arc::new(NoisyVerifier::new(spec.experiment.seed)),
        VerifierKind::Flip => Arc::new(FlipVerifier::new(
            oracle,
            spec.backend.flip_probability,
            spec.experiment.seed,
        )?),
    })
}

/// Runs one grid cell with the spec's strategy.
pub(super) fn execute(
    spec: &ExperimentSpec,
    question: &Question,
    g: u32,
    n: u32,
    job_seed: u64,
) -> Result<SearchResult, HarnessError> {
    let verifier = wire_verifier(spec, question.oracle.clone())?;
    let proposer = question.proposer.as_ref();
    let result = match spec.experiment.strategy {
        Strategy::Vg => vg_search(
            &spec.search_config(g, n, job_seed)?,
            proposer,
            verifier.as_ref(),
            &question.prompt_id,
        )?,
        Strategy::Beam => reference_beam_search(
            &spec.search_config(1, n, job_seed)?,
            proposer,
            verifier.as_ref(),
            &question.prompt_id,
        )?,
        Strategy::Bon => best_of_n(
            n,
            spec.sweep.total_steps,
            job_seed,
            proposer,
            verifier.as_ref(),
            &question.prompt_id,
        )?,
        Strategy::Dvts => dvts(
            n,
            spec.search.subtree_width,
            &spec.search_config(g, n, job_seed)?,
            proposer,
            verifier.as_ref(),
            &question.prompt_id,
        )?,
    };
    Ok(result)
}

pub(super) fn select_answer(
    result: &SearchResult,
    aggregation: Aggregation,
    vote_over: VoteOver,
    mode: AnswerMode,
    pick_seed: u64,
) -> Result<Option<String>, HarnessError> {
    let pool: &[Trajectory] = match vote_over {
        VoteOver::Final => &result.final_candidates,
        VoteOver::All => &result.all_candidates,
    };
    if pool.is_empty() {
        return Err(HarnessError::Invariant(
            "successful run produced an empty candidate pool".into(),
        ));
    }
    let answers: Vec<Option<String>> = pool.iter().map(|t| extract_answer(t, mode)).collect();
    let answer = match aggregation {
        Aggregation::Majority => majority_vote(&answers),
        Aggregation::Weighted => {
            let scores: Vec<f64> = pool.iter().map(|t| t.last_score().unwrap_or(0.0)).collect();
            weighted_vote(&answers, &scores)?
        }
        Aggregation::BestFinal => {
            extract_answer(best_score_select(pool, ScoreMode::Final)?, mode)
        }
        Aggregation::BestCumulative => {
            extract_answer(best_score_select(pool, ScoreMode::Cumulative)?, mode)
        }
        Aggregation::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(pick_seed);
            answers[rng.gen_range(0..answers.len())].clone()
        }
    };
    Ok(answer)
}

/// The (g, B1, B2, I) shape a strategy actually executes for budget n,
/// used for the emitted columns and the closed-form cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) struct RunShape {
    pub g: u32,
    pub b1: u32,
    pub b2: u32,
    pub cycles: u32,
}

pub(super) fn run_shape(spec: &ExperimentSpec, g: u32, n: u32) -> RunShape {
    match spec.experiment.strategy {
        Strategy::Bon => RunShape { g, b1: n, b2: 1, cycles: 1 },
        Strategy::Vg | Strategy::Beam | Strategy::Dvts => RunShape {
            g,
            b1: n / spec.search.branch_factor,
            b2: spec.search.branch_factor,
            cycles: spec.cycles_for(g),
        },
    }
}

/// Closed-form cost of one run, evaluated at the executed cycle count
/// (solution length g * I) rather than the nominal average.
pub(super) fn shape_formula_flops(params: &CostParams, shape: &RunShape) -> f64 {
    let formula_params =
        CostParams { avg_solution_length: (shape.g * shape.cycles) as f64, ..*params };
    let config = SearchConfig {
        granularity: shape.g,
        beam_width: shape.b1,
        branch_factor: shape.b2,
        max_cycles: shape.cycles,
        ..SearchConfig::default()
    };
    total_flops(&formula_params, &config)
}

/// Standard error of a binomial proportion estimated from m trials.
pub fn binomial_stderr(p: f64, m: usize) -> f64 {
    if m == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / m as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: String,
    pub g: u32,
    pub n: u32,
    #[serde(rename = "B1")]
    pub b1: u32,
    #[serde(rename = "B2")]
    pub b2: u32,
    #[serde(rename = "I")]
    pub cycles: u32,
    pub repetition: u32,
    pub question_id: String,
    pub correct: bool,
    pub proposer_steps: u64,
    pub proposer_tokens: u64,
    pub verifier_calls: u64,
    pub ledger_flops: f64,
    pub formula_flops: f64,
    pub selected_answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub g: u32,
    pub n: u32,
    pub accuracy: f64,
    pub stderr: f64,
    pub mean_ledger_flops: f64,
    pub mean_formula_flops: f64,
    pub log2_flops: f64,
}

/// Paths of the three files a sweep writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOutputs {
    pub sweep_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub accuracy_csv: PathBuf,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    g: u32,
    n: u32,
    rep: u32,
    qid: u32,
}

fn run_job(
    spec: &ExperimentSpec,
    dataset: Option<&[DatasetQuestion]>,
    job: Job,
) -> Result<SweepRow, HarnessError> {
    let question = build_question(spec, job.qid, dataset)?;
    let job_seed = mix_seed(
        spec.experiment.seed,
        &[JOB_SALT, job.g as u64, job.n as u64, job.rep as u64, job.qid as u64],
    );
    let result = execute(spec, &question, job.g, job.n, job_seed)?;
    let selected = select_answer(
        &result,
        spec.experiment.aggregation,
        spec.experiment.vote_over,
        question.answer_mode,
        mix_seed(job_seed, &[PICK_SALT]),
    )?;
    let shape = run_shape(spec, job.g, job.n);
    let params = spec.cost_params()?;
    Ok(SweepRow {
        strategy: spec.experiment.strategy.label().to_string(),
        g: job.g,
        n: job.n,
        b1: shape.b1,
        b2: shape.b2,
        cycles: shape.cycles,
        repetition: job.rep,
        question_id: question.prompt_id,
        correct: selected.as_deref() == Some(question.truth.as_str()),
        proposer_steps: result.ledger.proposer_steps,
        proposer_tokens: result.ledger.proposer_tokens,
        verifier_calls: result.ledger.verifier_calls,
        ledger_flops: ledger_to_flops(&result.ledger, &params),
        formula_flops: shape_formula_flops(&params, &shape),
        selected_answer: selected.unwrap_or_default(),
    })
}

/// Runs a single (g, n) cell over every question, one repetition, without
/// writing anything. The `run` subcommand's workhorse.
pub fn run_cell(spec: &ExperimentSpec, g: u32, n: u32) -> Result<Vec<SweepRow>, HarnessError> {
    let dataset = load_dataset(spec)?;
    (0..spec.experiment.questions)
        .map(|qid| run_job(spec, dataset.as_deref(), Job { g, n, rep: 0, qid }))
        .collect()
}

fn summarize(rows: &[SweepRow], questions: usize) -> Vec<SummaryRow> {
    rows.chunks(questions)
        .map(|chunk| {
            let m = chunk.len();
            let accuracy = chunk.iter().filter(|r| r.correct).count() as f64 / m as f64;
            let mean_ledger = chunk.iter().map(|r| r.ledger_flops).sum::<f64>() / m as f64;
            let mean_formula = chunk.iter().map(|r| r.formula_flops).sum::<f64>() / m as f64;
            SummaryRow {
                strategy: chunk[0].strategy.clone(),
                g: chunk[0].g,
                n: chunk[0].n,
                accuracy,
                stderr: binomial_stderr(accuracy, m),
                mean_ledger_flops: mean_ledger,
                mean_formula_flops: mean_formula,
                log2_flops: mean_ledger.log2(),
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(File::create(path)?);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Runs the full grid and writes `sweep.csv`, `summary.csv`, and
/// `accuracy_table.csv` into `output_dir`. Output bytes are a pure
/// function of the spec: jobs run in parallel but land in grid order.
pub fn run_sweep(spec: &ExperimentSpec, output_dir: &Path) -> Result<SweepOutputs, HarnessError> {
    fs::create_dir_all(output_dir)?;
    let dataset = load_dataset(spec)?;
    let granularities = spec.effective_granularities();

    let mut jobs = Vec::new();
    for &g in &granularities {
        for &n in &spec.sweep.budgets {
            for rep in 0..spec.experiment.repetitions {
                for qid in 0..spec.experiment.questions {
                    jobs.push(Job { g, n, rep, qid });
                }
            }
        }
    }

    let run_all = || -> Vec<Result<SweepRow, HarnessError>> {
        jobs.par_iter().map(|job| run_job(spec, dataset.as_deref(), *job)).collect()
    };
    let outcomes = if spec.experiment.workers == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.experiment.workers)
            .build()?
            .install(run_all)
    };
    let rows: Vec<SweepRow> = outcomes.into_iter().collect::<Result<_, _>>()?;

    let expected = granularities.len()
        * spec.sweep.budgets.len()
        * spec.experiment.repetitions as usize
        * spec.experiment.questions as usize;
    if rows.len() != expected {
        return Err(HarnessError::Invariant(format!(
            "expected {expected} sweep rows, produced {}",
            rows.len()
        )));
    }

    let outputs = SweepOutputs {
        sweep_csv: output_dir.join("sweep.csv"),
        summary_csv: output_dir.join("summary.csv"),
        accuracy_csv: output_dir.join("accuracy_table.csv"),
    };
    write_csv(&outputs.sweep_csv, &rows)?;
    write_csv(&outputs.summary_csv, &summarize(&rows, spec.experiment.questions as usize))?;

    let mut table = AccuracyTable::new();
    for (row, job) in rows.iter().zip(&jobs) {
        let difficulty = dataset
            .as_deref()
            .and_then(|d| d.get(job.qid as usize))
            .and_then(|q| q.difficulty.clone())
            .unwrap_or_else(|| DEFAULT_DIFFICULTY.to_string());
        table.record(row.g, &difficulty, row.n, row.correct);
    }
    write_accuracy_csv(&table, File::create(&outputs.accuracy_csv)?)?;

    Ok(outputs)
}
