//! Verifier-guided test-time search with a tunable verification granularity.
//!
//! The engine interleaves candidate generation with verifier scoring every
//! `g` generation steps. At `g = 1` it behaves like step-level beam search;
//! with `g` covering a whole solution and a single cycle it degenerates to
//! best-of-n sampling. Everything in between trades verification compute
//! against pruning quality.
//!
//! Module map:
//! - [`trajectory`], [`config`], [`ledger`]: shared domain types and the
//!   exact operation-count ledger.
//! - [`backends`]: proposer/verifier traits, synthetic testbeds, stochastic
//!   wrappers, and HTTP-backed remote implementations.
//! - [`search`]: the granularity-parameterised engine plus independently
//!   coded baselines (beam search, best-of-n, subtree search).
//! - [`cost`]: closed-form FLOPs model and the normalized compute proxy.
//! - [`aggregate`]: boxed-answer extraction, voting, and score selection.
//! - [`adaptive`]: accuracy tables and granularity-selection strategies.
//! - [`harness`]: experiment specs, sweeps, stability profiling, CSV output.

pub mod adaptive;
pub mod aggregate;
pub mod backends;
pub mod config;
pub mod cost;
pub mod harness;
pub mod ledger;
pub mod search;
pub mod trajectory;

pub use config::{ConfigError, SearchConfig};
pub use ledger::CostLedger;
pub use trajectory::{parse_steps, GenerationStep, Trajectory, TrajectoryStatus};
