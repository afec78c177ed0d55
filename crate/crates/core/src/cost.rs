//! Closed-form FLOPs model for a search run and the normalized compute
//! proxy, plus conversion from exact ledger counts to FLOPs.
//!
//! Generation FLOPs follow the standard 2-FLOPs-per-parameter-per-token
//! estimate; a verifier call costs `2 * alpha * verifier_params`. The
//! closed forms assume every trajectory runs the full average length `L`
//! in `L / g` cycles, so they are an approximation of what the ledger
//! measures whenever candidates stop early.

use crate::config::SearchConfig;
use crate::ledger::CostLedger;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Model and task constants the cost formulas need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Average solution length in generation steps (L).
    pub avg_solution_length: f64,
    /// Average tokens per generation step (T).
    pub avg_tokens_per_step: f64,
    /// Proposer parameter count (Pg).
    pub proposer_params: f64,
    /// Verifier parameter count (Pv).
    pub verifier_params: f64,
    /// FLOPs-per-call multiplier for the verifier; 1 for verifiers that
    /// emit a single score per evaluation.
    pub verifier_alpha: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            avg_solution_length: 12.0,
            avg_tokens_per_step: 100.0,
            proposer_params: 7e9,
            verifier_params: 1.5e9,
            verifier_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("{field} must be a positive finite number (got {value})")]
    NotPositive { field: &'static str, value: f64 },
}

impl CostParams {
    pub fn validate(self) -> Result<Self, CostError> {
        let check = |field: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(CostError::NotPositive { field, value })
            }
        };
        check("avg_solution_length", self.avg_solution_length)?;
        check("avg_tokens_per_step", self.avg_tokens_per_step)?;
        check("proposer_params", self.proposer_params)?;
        check("verifier_params", self.verifier_params)?;
        check("verifier_alpha", self.verifier_alpha)?;
        Ok(self)
    }

    /// Relative generation-to-verification cost, T * Pg / Pv. Always
    /// recomputed from the stored fields.
    pub fn lambda(&self) -> f64 {
        self.avg_tokens_per_step * self.proposer_params / self.verifier_params
    }
}

/// Generation compute for a full run:
/// `2 * T * B1 * (g - 1 + B2) * (L / g) * Pg`.
pub fn generation_flops(params: &CostParams, config: &SearchConfig) -> f64 {
    let g = config.granularity as f64;
    let b1 = config.beam_width as f64;
    let b2 = config.branch_factor as f64;
    2.0 * params.avg_tokens_per_step
        * b1
        * (g - 1.0 + b2)
        * (params.avg_solution_length / g)
        * params.proposer_params
}

/// Verification compute for a full run:
/// `2 * alpha * B1 * B2 * (L / g) * Pv`.
pub fn verification_flops(params: &CostParams, config: &SearchConfig) -> f64 {
    let g = config.granularity as f64;
    let b1 = config.beam_width as f64;
    let b2 = config.branch_factor as f64;
    2.0 * params.verifier_alpha
        * b1
        * b2
        * (params.avg_solution_length / g)
        * params.verifier_params
}

pub fn total_flops(params: &CostParams, config: &SearchConfig) -> f64 {
    generation_flops(params, config) + verification_flops(params, config)
}

/// Dimensionless per-solution compute,
/// `(lambda * B1 * (g - 1 + B2) + B1 * B2) / g`. For verifiers scored at
/// alpha = 1 this is `total_flops / (2 * L * Pv)`.
pub fn normalized_proxy(g: u32, beam_width: u32, branch_factor: u32, lambda: f64) -> f64 {
    let g = g as f64;
    let b1 = beam_width as f64;
    let b2 = branch_factor as f64;
    (lambda * b1 * (g - 1.0 + b2) + b1 * b2) / g
}

/// FLOPs implied by exact ledger counts:
/// `2 * Pg * proposer_tokens + 2 * alpha * Pv * verifier_calls`. Uses the
/// tokens that were actually generated, not the `T` average.
pub fn ledger_to_flops(ledger: &CostLedger, params: &CostParams) -> f64 {
    2.0 * params.proposer_params * ledger.proposer_tokens as f64
        + 2.0 * params.verifier_alpha * params.verifier_params * ledger.verifier_calls as f64
}
