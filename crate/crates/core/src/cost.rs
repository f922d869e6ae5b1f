//! Token-based deployment cost: per-token prices and the pluggable
//! output-length predictor.
//!
//! The predicted cost of running an arm is
//! `input_tokens * input_price + predicted_output_tokens * output_price`.
//! Input counts are known at selection time; output counts come from a
//! frozen predictor that stands in for a learned length-regression model.
//! Cost units are abstract dollars; nothing constrains them to money.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::ArmId;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("prices must be non-negative and finite: input {input}, output {output}")]
    BadPrices { input: f64, output: f64 },
    #[error("unknown arm {0} in predictor")]
    UnknownArm(ArmId),
    #[error("linear predictor coefficients for arm {0} are not finite")]
    BadCoefficients(ArmId),
}

/// Dollars per input token and per output token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenPricing {
    pub input_price: f64,
    pub output_price: f64,
}

impl TokenPricing {
    pub fn new(input_price: f64, output_price: f64) -> Result<Self, CostError> {
        let ok = |p: f64| p.is_finite() && p >= 0.0;
        if !ok(input_price) || !ok(output_price) {
            return Err(CostError::BadPrices {
                input: input_price,
                output: output_price,
            });
        }
        Ok(Self {
            input_price,
            output_price,
        })
    }
}

/// The built-in per-token price points (Azure rates): GPT-3.5 Turbo, Llama
/// 3.3, and the three finetuned GPT-4o deployments, which share one rate.
pub const BUILTIN_PRICING: [(&str, TokenPricing); 5] = [
    (
        "gpt-3.5-turbo",
        TokenPricing {
            input_price: 5e-7,
            output_price: 1.5e-6,
        },
    ),
    (
        "llama-3.3",
        TokenPricing {
            input_price: 7.1e-7,
            output_price: 7.1e-7,
        },
    ),
    (
        "med",
        TokenPricing {
            input_price: 2.5e-7,
            output_price: 1e-5,
        },
    ),
    (
        "tele",
        TokenPricing {
            input_price: 2.5e-7,
            output_price: 1e-5,
        },
    ),
    (
        "med-iii",
        TokenPricing {
            input_price: 2.5e-7,
            output_price: 1e-5,
        },
    ),
];

/// Looks up a built-in price point by name.
pub fn builtin_pricing(name: &str) -> Option<TokenPricing> {
    BUILTIN_PRICING
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| *p)
}

/// Slope/intercept of a per-arm linear output-length model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCoeffs {
    pub slope: f64,
    pub intercept: f64,
}

/// A frozen, deterministic output-token-count predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputLengthPredictor {
    /// The same count for every arm and input.
    Constant { tokens: u64 },
    /// `round(max(0, slope * input_tokens + intercept))` with per-arm
    /// coefficients, indexed `[subtask][arm]`.
    OracleLinear { coeffs: Vec<Vec<LinearCoeffs>> },
    /// A fixed count per arm, indexed `[subtask][arm]`.
    Table { tokens: Vec<Vec<u64>> },
}

impl OutputLengthPredictor {
    /// Predicted output token count for running `arm` on an input of the
    /// given length.
    pub fn predict(&self, arm: ArmId, input_tokens: u64) -> Result<u64, CostError> {
        match self {
            Self::Constant { tokens } => Ok(*tokens),
            Self::OracleLinear { coeffs } => {
                let c = coeffs
                    .get(arm.subtask)
                    .and_then(|row| row.get(arm.arm))
                    .ok_or(CostError::UnknownArm(arm))?;
                if !(c.slope.is_finite() && c.intercept.is_finite()) {
                    return Err(CostError::BadCoefficients(arm));
                }
                let raw = c.slope * input_tokens as f64 + c.intercept;
                Ok(raw.max(0.0).round() as u64)
            }
            Self::Table { tokens } => tokens
                .get(arm.subtask)
                .and_then(|row| row.get(arm.arm))
                .copied()
                .ok_or(CostError::UnknownArm(arm)),
        }
    }
}

/// Predicted dollars for running `arm` on `input_tokens` input tokens.
pub fn predicted_cost(
    pricing: TokenPricing,
    predictor: &OutputLengthPredictor,
    arm: ArmId,
    input_tokens: u64,
) -> Result<f64, CostError> {
    let output = predictor.predict(arm, input_tokens)?;
    Ok(input_tokens as f64 * pricing.input_price + output as f64 * pricing.output_price)
}

/// True spend once the environment reveals the actual output length.
pub fn realized_cost(pricing: TokenPricing, input_tokens: u64, output_tokens: u64) -> f64 {
    input_tokens as f64 * pricing.input_price + output_tokens as f64 * pricing.output_price
}
