//! HTTP backends: an OpenAI-compatible completions proposer and a minimal
//! JSON step-scoring verifier.
//!
//! Requests retry on transport failures with exponential backoff, and each
//! backend bounds its in-flight requests with a counting semaphore so a
//! parallel sweep cannot stampede an endpoint.

use super::{BackendError, ProposeContext, Proposer, StepProposal, Verifier, VerifierScore};
use crate::trajectory::{approx_token_count, GenerationStep, Trajectory};
use serde::{Deserialize, Serialize};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

/// Connection settings for a completions endpoint.
///
/// `url` is the server base; requests go to `{url}/v1/completions`. One
/// completion is requested per step, with the step delimiter as the stop
/// sequence. A response that contains the delimiter stopped at a step
/// boundary (non-terminal); a `stop` finish without the delimiter is an
/// end-of-sequence stop (terminal), as is any text matching
/// `terminal_pattern`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposerEndpoint {
    pub url: String,
    pub model: String,
    /// Sent as a bearer token when present.
    pub api_key: Option<String>,
    pub temperature: f64,
    pub top_p: f64,
    pub step_delimiter: String,
    pub terminal_pattern: String,
    pub max_tokens_per_step: u64,
    /// Retries after the first attempt; transport failures only.
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_ms: u64,
    pub max_in_flight: u32,
}

impl Default for ProposerEndpoint {
    fn default() -> Self {
        Self {
            url: "http://localhost:8000".into(),
            model: "default".into(),
            api_key: None,
            temperature: 0.8,
            top_p: 1.0,
            step_delimiter: "\n\n".into(),
            terminal_pattern: "\\boxed{".into(),
            max_tokens_per_step: 2048,
            max_retries: 3,
            retry_backoff_ms: 500,
            timeout_ms: 30_000,
            max_in_flight: 8,
        }
    }
}

impl ProposerEndpoint {
    /// Applies `PROPOSER_URL` and `API_KEY` when set. Environment variables
    /// override endpoint addressing only, never sampling parameters.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(url) = std::env::var("PROPOSER_URL") {
            self.url = url;
        }
        if let Ok(key) = std::env::var("API_KEY") {
            self.api_key = Some(key);
        }
        self
    }
}

/// Connection settings for a step-scoring endpoint: POST `{url}/score` with
/// `{"prompt": …, "steps": […]}`, answered by `{"scores": […]}` with one
/// score per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifierEndpoint {
    pub url: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_ms: u64,
    pub max_in_flight: u32,
}

impl Default for VerifierEndpoint {
    fn default() -> Self {
        Self {
            url: "http://localhost:8001".into(),
            api_key: None,
            max_retries: 3,
            retry_backoff_ms: 500,
            timeout_ms: 30_000,
            max_in_flight: 8,
        }
    }
}

impl VerifierEndpoint {
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(url) = std::env::var("VERIFIER_URL") {
            self.url = url;
        }
        if let Ok(key) = std::env::var("API_KEY") {
            self.api_key = Some(key);
        }
        self
    }
}

/// Counting semaphore bounding concurrent requests per backend instance.
struct InFlightPool {
    permits: Mutex<u32>,
    released: Condvar,
}

impl InFlightPool {
    fn new(capacity: u32) -> Self {
        Self { permits: Mutex::new(capacity.max(1)), released: Condvar::new() }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.released.wait(permits).unwrap();
        }
        *permits -= 1;
        InFlightPermit { pool: self }
    }
}

struct InFlightPermit<'a> {
    pool: &'a InFlightPool,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        *self.pool.permits.lock().unwrap() += 1;
        self.pool.released.notify_one();
    }
}

fn build_client(timeout_ms: u64) -> Result<reqwest::blocking::Client, BackendError> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
        .map_err(|e| BackendError::Transport { attempts: 0, message: e.to_string() })
}

/// POSTs `body` to `url`, retrying transport-level failures (connection
/// errors, timeouts, 5xx, 429) with exponential backoff. Other HTTP errors
/// fail immediately; the response body is returned undecoded.
fn post_with_retries(
    client: &reqwest::blocking::Client,
    url: &str,
    api_key: Option<&str>,
    body: &impl Serialize,
    max_retries: u32,
    backoff_ms: u64,
) -> Result<String, BackendError> {
    let mut last_error = String::new();
    for attempt in 0..=max_retries {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(backoff_ms << (attempt - 1)));
        }
        let mut request = client.post(url).json(body);
        if let Some(key) = api_key {
            request = request.bearer_auth(key);
        }
        match request.send() {
            Ok(response) => {
                let status = response.status();
                if status.is_success() {
                    return response.text().map_err(|e| BackendError::Transport {
                        attempts: attempt + 1,
                        message: e.to_string(),
                    });
                }
                let retryable = status.is_server_error() || status.as_u16() == 429;
                last_error = format!("HTTP {status}");
                if !retryable {
                    return Err(BackendError::Transport {
                        attempts: attempt + 1,
                        message: last_error,
                    });
                }
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(BackendError::Transport { attempts: max_retries + 1, message: last_error })
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: String,
    max_tokens: u64,
    temperature: f64,
    top_p: f64,
    stop: [&'a str; 1],
    seed: u64,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
    #[serde(default)]
    usage: Option<CompletionUsage>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    text: String,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct CompletionUsage {
    #[serde(default)]
    completion_tokens: Option<u64>,
}

/// How one raw completion maps onto a step.
struct ClassifiedCompletion {
    text: String,
    is_terminal: bool,
    hit_token_cap: bool,
}

/// Cuts the completion at the first step delimiter and classifies the stop:
/// a delimiter means the step ended naturally (non-terminal), `length`
/// means the token cap fired, and a `stop` finish without any delimiter is
/// an end-of-sequence stop. The terminal pattern marks a step terminal in
/// every case.
fn classify_completion(
    raw: &str,
    finish_reason: Option<&str>,
    delimiter: &str,
    terminal_pattern: &str,
) -> ClassifiedCompletion {
    let (text, saw_delimiter) = match raw.find(delimiter) {
        Some(pos) => (&raw[..pos], true),
        None => (raw, false),
    };
    let hit_token_cap = finish_reason == Some("length");
    let eos_stop = finish_reason == Some("stop") && !saw_delimiter;
    let is_terminal = text.contains(terminal_pattern) || (eos_stop && !hit_token_cap);
    ClassifiedCompletion { text: text.to_string(), is_terminal, hit_token_cap }
}

/// Proposer that requests one step at a time from a completions endpoint.
pub struct RemoteProposer {
    endpoint: ProposerEndpoint,
    /// Question text placed before the trajectory in every prompt. When
    /// unset, the trajectory's prompt id is used verbatim.
    prompt_prefix: Option<String>,
    client: reqwest::blocking::Client,
    pool: InFlightPool,
}

impl RemoteProposer {
    pub fn new(endpoint: ProposerEndpoint) -> Result<Self, BackendError> {
        let client = build_client(endpoint.timeout_ms)?;
        let pool = InFlightPool::new(endpoint.max_in_flight);
        Ok(Self { endpoint, prompt_prefix: None, client, pool })
    }

    /// Sets the question text sent ahead of the trajectory.
    pub fn with_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.prompt_prefix = Some(prompt.into());
        self
    }

    fn render_prompt(&self, trajectory: &Trajectory) -> String {
        let mut prompt = self
            .prompt_prefix
            .clone()
            .unwrap_or_else(|| trajectory.prompt_id.clone());
        for step in &trajectory.steps {
            prompt.push_str(&step.text);
            prompt.push_str(&self.endpoint.step_delimiter);
        }
        prompt
    }
}

impl Proposer for RemoteProposer {
    fn propose_step(
        &self,
        trajectory: &Trajectory,
        ctx: &ProposeContext,
    ) -> Result<StepProposal, BackendError> {
        let request = CompletionRequest {
            model: &self.endpoint.model,
            prompt: self.render_prompt(trajectory),
            max_tokens: self.endpoint.max_tokens_per_step,
            temperature: self.endpoint.temperature,
            top_p: self.endpoint.top_p,
            stop: [&self.endpoint.step_delimiter],
            seed: ctx.derived_seed(trajectory),
        };
        let url = format!("{}/v1/completions", self.endpoint.url.trim_end_matches('/'));
        let _permit = self.pool.acquire();
        let body = post_with_retries(
            &self.client,
            &url,
            self.endpoint.api_key.as_deref(),
            &request,
            self.endpoint.max_retries,
            self.endpoint.retry_backoff_ms,
        )?;
        let response: CompletionResponse = serde_json::from_str(&body)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        let choice = response
            .choices
            .first()
            .ok_or_else(|| BackendError::MalformedResponse("no choices".into()))?;
        let classified = classify_completion(
            &choice.text,
            choice.finish_reason.as_deref(),
            &self.endpoint.step_delimiter,
            &self.endpoint.terminal_pattern,
        );
        let token_count = response
            .usage
            .and_then(|u| u.completion_tokens)
            .unwrap_or_else(|| approx_token_count(&classified.text));
        Ok(StepProposal {
            step: GenerationStep::new(classified.text, token_count, classified.is_terminal),
            hit_token_cap: classified.hit_token_cap,
        })
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    prompt: &'a str,
    steps: Vec<String>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// Verifier backed by a step-scoring endpoint. The selection score is the
/// last step's score; the full per-step vector is kept for stability
/// profiling.
pub struct RemoteVerifier {
    endpoint: VerifierEndpoint,
    client: reqwest::blocking::Client,
    pool: InFlightPool,
}

impl RemoteVerifier {
    pub fn new(endpoint: VerifierEndpoint) -> Result<Self, BackendError> {
        let client = build_client(endpoint.timeout_ms)?;
        let pool = InFlightPool::new(endpoint.max_in_flight);
        Ok(Self { endpoint, client, pool })
    }
}

impl Verifier for RemoteVerifier {
    fn score(&self, trajectory: &Trajectory) -> Result<VerifierScore, BackendError> {
        let request =
            ScoreRequest { prompt: &trajectory.prompt_id, steps: trajectory.step_texts() };
        let url = format!("{}/score", self.endpoint.url.trim_end_matches('/'));
        let step_count = request.steps.len();
        let _permit = self.pool.acquire();
        let body = post_with_retries(
            &self.client,
            &url,
            self.endpoint.api_key.as_deref(),
            &request,
            self.endpoint.max_retries,
            self.endpoint.retry_backoff_ms,
        )?;
        let response: ScoreResponse = serde_json::from_str(&body)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        if response.scores.is_empty() {
            return Err(BackendError::NoScores);
        }
        if response.scores.len() != step_count {
            return Err(BackendError::MalformedResponse(format!(
                "expected {} scores, got {}",
                step_count,
                response.scores.len()
            )));
        }
        if response.scores.iter().any(|s| !s.is_finite()) {
            return Err(BackendError::MalformedResponse("non-finite score".into()));
        }
        let step_scores: Vec<f64> = response
            .scores
            .iter()
            .map(|&s| {
                if !(0.0..=1.0).contains(&s) {
                    log::warn!("clamping out-of-range verifier score {s}");
                    s.clamp(0.0, 1.0)
                } else {
                    s
                }
            })
            .collect();
        let value = *step_scores.last().unwrap();
        Ok(VerifierScore { value, step_scores })
    }
}
