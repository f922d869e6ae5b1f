//! Selection/update contract for the sequential bandit and all baselines.
//!
//! Every policy scores the arms of one subtask at a time, given the current
//! prompt embedding and the predicted per-arm costs, and learns from the
//! round's observations after the whole pipeline has run. Selection is pure;
//! all state changes happen in `observe_round`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidence::{ConfidenceError, ConfidenceState, MatrixMode};
use crate::context::{ArmDescription, ContextError, Embedding};
use crate::mlp::{MlpError, NetworkArch, NetworkParams, TrainingHistory};
use crate::rng::{mix, stream};

mod baseline;
mod neural_linucb;
mod neural_ucb;
mod seq_bandits;

pub use baseline::{FixedPolicy, RandomPolicy};
pub use neural_linucb::NeuralLinUcb;
pub use neural_ucb::NeuralUcb;
pub use seq_bandits::SeqBandits;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid policy config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("subtask {0} is out of range")]
    UnknownSubtask(usize),
    #[error("expected {expected} predicted costs for subtask {subtask}, got {actual}")]
    CostLengthMismatch {
        subtask: usize,
        expected: usize,
        actual: usize,
    },
    #[error("round has {actual} observations, pipeline has {expected} subtasks")]
    ObservationMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
    #[error(transparent)]
    Context(#[from] ContextError),
}

/// The five selectable policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Seqbandits,
    CaNeuralucb,
    CaNeurallinucb,
    Random,
    Fixed,
}

impl PolicyName {
    pub const ALL: [PolicyName; 5] = [
        PolicyName::Seqbandits,
        PolicyName::CaNeuralucb,
        PolicyName::CaNeurallinucb,
        PolicyName::Random,
        PolicyName::Fixed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Seqbandits => "seqbandits",
            Self::CaNeuralucb => "ca_neuralucb",
            Self::CaNeurallinucb => "ca_neurallinucb",
            Self::Random => "random",
            Self::Fixed => "fixed",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == name)
    }
}

impl std::fmt::Display for PolicyName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    LowestIndex,
    /// Seeded-uniform pick among scores within 1e-12 of the maximum; avoids
    /// systematic index bias while networks are still symmetric.
    #[default]
    SeededRandom,
}

fn default_eta() -> f64 {
    3e-4
}

fn default_gd_steps() -> usize {
    5
}

fn default_lambda() -> f64 {
    1.0
}

fn default_nu() -> f64 {
    1.0
}

fn default_hidden_width() -> usize {
    50
}

fn default_hidden_layers() -> usize {
    1
}

fn default_matrix_mode() -> MatrixMode {
    MatrixMode::Exact
}

fn default_retrain_period() -> usize {
    10
}

fn default_cost_term() -> bool {
    true
}

/// All tunables of the learning policies; every field is a config-file key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Per-subtask cost weights; empty means cost-agnostic (all zero).
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// Gradient-descent learning rate.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Gradient-descent steps per update (J).
    #[serde(default = "default_gd_steps")]
    pub gd_steps: usize,
    /// Confidence matrix regularizer.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Exploration coefficient multiplying the bonus.
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_hidden_width")]
    pub hidden_width: usize,
    #[serde(default = "default_hidden_layers")]
    pub hidden_layers: usize,
    /// Overrides the √width output scale when set.
    #[serde(default)]
    pub output_scale: Option<f64>,
    #[serde(default = "default_matrix_mode")]
    pub matrix_mode: MatrixMode,
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Representation retraining period of the linear-head baseline;
    /// 0 freezes the representation.
    #[serde(default = "default_retrain_period")]
    pub retrain_period: usize,
    /// Arm pinned per subtask by the fixed policy.
    #[serde(default)]
    pub fixed_arms: Option<Vec<usize>>,
    /// Ablation switch: when false the cost term is dropped from the score
    /// entirely instead of being multiplied by zero.
    #[serde(default = "default_cost_term")]
    pub cost_term: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            alpha: Vec::new(),
            eta: default_eta(),
            gd_steps: default_gd_steps(),
            lambda: default_lambda(),
            nu: default_nu(),
            hidden_width: default_hidden_width(),
            hidden_layers: default_hidden_layers(),
            output_scale: None,
            matrix_mode: default_matrix_mode(),
            tie_break: TieBreak::default(),
            retrain_period: default_retrain_period(),
            fixed_arms: None,
            cost_term: default_cost_term(),
        }
    }
}

impl PolicyConfig {
    /// Checks fields against a pipeline of `arm_counts` arms per subtask and
    /// returns the resolved per-subtask alpha vector.
    pub fn validate(&self, arm_counts: &[usize]) -> Result<Vec<f64>, PolicyError> {
        let k = arm_counts.len();
        let fail = |field: &str, reason: String| {
            Err(PolicyError::InvalidConfig {
                field: field.into(),
                reason,
            })
        };
        let alpha = if self.alpha.is_empty() {
            vec![0.0; k]
        } else if self.alpha.len() == k {
            self.alpha.clone()
        } else {
            return fail(
                "alpha",
                format!("{} entries for {} subtasks", self.alpha.len(), k),
            );
        };
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return fail("alpha", "entries must be non-negative and finite".into());
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return fail("eta", format!("{} must be positive", self.eta));
        }
        if self.gd_steps == 0 {
            return fail("gd_steps", "must be at least 1".into());
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return fail("lambda", format!("{} must be positive", self.lambda));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return fail("nu", format!("{} must be non-negative", self.nu));
        }
        if self.hidden_width == 0 {
            return fail("hidden_width", "must be at least 1".into());
        }
        if self.hidden_layers == 0 {
            return fail("hidden_layers", "must be at least 1".into());
        }
        if let Some(scale) = self.output_scale {
            if !(scale.is_finite() && scale > 0.0) {
                return fail("output_scale", format!("{scale} must be positive"));
            }
        }
        if let Some(arms) = &self.fixed_arms {
            if arms.len() != k {
                return fail(
                    "fixed_arms",
                    format!("{} entries for {} subtasks", arms.len(), k),
                );
            }
            for (i, (&arm, &count)) in arms.iter().zip(arm_counts).enumerate() {
                if arm >= count {
                    return fail(
                        "fixed_arms",
                        format!("subtask {i} pins arm {arm}, only {count} available"),
                    );
                }
            }
        }
        Ok(alpha)
    }

    pub(crate) fn arch(&self, input_dim: usize) -> Result<NetworkArch, PolicyError> {
        match self.output_scale {
            Some(scale) => Ok(NetworkArch::with_output_scale(
                input_dim,
                self.hidden_width,
                self.hidden_layers,
                scale,
            )?),
            None => Ok(NetworkArch::new(
                input_dim,
                self.hidden_width,
                self.hidden_layers,
            )?),
        }
    }
}

/// Score breakdown of one arm in one selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmScore {
    /// Network reward estimate f.
    pub estimate: f64,
    /// Raw exploration bonus before the nu coefficient.
    pub bonus: f64,
    /// alpha_i * C_j as subtracted from the score.
    pub cost_penalty: f64,
    /// estimate + nu * bonus - cost_penalty.
    pub total: f64,
}

impl ArmScore {
    pub const ZERO: ArmScore = ArmScore {
        estimate: 0.0,
        bonus: 0.0,
        cost_penalty: 0.0,
        total: 0.0,
    };
}

/// Per-arm score breakdown and the chosen index for one subtask selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace {
    pub scores: Vec<ArmScore>,
    pub chosen: usize,
}

/// What one pipeline stage revealed: which arm ran on which prompt and the
/// base reward it earned.
#[derive(Debug, Clone)]
pub struct StageObservation {
    pub subtask: usize,
    pub arm: usize,
    pub prompt: Embedding,
    pub reward: f64,
}

/// Learning state owned per arm (or per subtask for the shared-network
/// baselines).
#[derive(Debug, Clone)]
pub struct ArmState {
    pub params: NetworkParams,
    pub confidence: ConfidenceState,
    pub history: TrainingHistory,
}

/// The selection/update contract every policy implements.
pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Scores every arm of `subtask` and returns the chosen index with the
    /// full score breakdown; no state mutation.
    fn select(
        &self,
        t: usize,
        subtask: usize,
        prompt: &Embedding,
        predicted_costs: &[f64],
    ) -> Result<(usize, SelectionTrace), PolicyError>;

    /// Consumes the round's observations, one per subtask.
    fn observe_round(
        &mut self,
        t: usize,
        observations: &[StageObservation],
    ) -> Result<(), PolicyError>;
}

/// Argmax over trace totals with ties within 1e-12 of the max resolved by
/// the configured rule; the seeded rule derives its pick from
/// `(policy_seed, t, subtask)` so selection stays pure.
pub(crate) fn choose_from_scores(
    scores: &[ArmScore],
    tie_break: TieBreak,
    policy_seed: u64,
    t: usize,
    subtask: usize,
) -> usize {
    debug_assert!(!scores.is_empty());
    let max = scores
        .iter()
        .map(|s| s.total)
        .fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.total >= max - 1e-12)
        .map(|(j, _)| j)
        .collect();
    match tie_break {
        TieBreak::LowestIndex => candidates[0],
        TieBreak::SeededRandom => {
            if candidates.len() == 1 {
                candidates[0]
            } else {
                let h = mix(&[
                    policy_seed,
                    stream::TIE_BREAK,
                    t as u64,
                    subtask as u64,
                ]);
                candidates[(h % candidates.len() as u64) as usize]
            }
        }
    }
}

/// Initialization seed of subtask `i`'s network(s) under a policy seed.
///
/// All arms of a subtask share one initial weight draw: with the
/// antisymmetrized init every arm then starts from the same zero estimate
/// and near-identical exploration bonus, so the early selection race is
/// decided by observed rewards instead of by which arm drew the luckiest
/// initial gradient norm. Arm networks diverge as soon as they train. The
/// shared-network baselines use the same seed, which also makes them
/// coincide with the per-arm policy on single-arm subtasks.
pub(crate) fn net_seed(policy_seed: u64, subtask: usize) -> u64 {
    mix(&[policy_seed, stream::NET_INIT, subtask as u64])
}

/// Builds the named policy over the given arm descriptions.
pub fn build_policy(
    name: PolicyName,
    config: &PolicyConfig,
    descriptions: Vec<Vec<ArmDescription>>,
    input_dim: usize,
    policy_seed: u64,
) -> Result<Box<dyn Policy>, PolicyError> {
    Ok(match name {
        PolicyName::Seqbandits => Box::new(SeqBandits::new(
            config,
            descriptions,
            input_dim,
            policy_seed,
        )?),
        PolicyName::CaNeuralucb => Box::new(NeuralUcb::new(
            config,
            descriptions,
            input_dim,
            policy_seed,
        )?),
        PolicyName::CaNeurallinucb => Box::new(NeuralLinUcb::new(
            config,
            descriptions,
            input_dim,
            policy_seed,
        )?),
        PolicyName::Random => Box::new(RandomPolicy::new(config, &descriptions, policy_seed)?),
        PolicyName::Fixed => Box::new(FixedPolicy::new(config, &descriptions)?),
    })
}
