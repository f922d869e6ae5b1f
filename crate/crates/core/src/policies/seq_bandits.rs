//! The sequential bandit: a separate network and confidence matrix for
//! every (subtask, arm) combination.
//!
//! Each arm j of subtask i is scored as
//! `u = f(x) + nu * ‖g(x)/√n‖_{Z⁻¹} - alpha_i * C_j` on the context
//! `x = prompt ⊙ d_j`. Only the arms actually played learn: their confidence
//! matrix absorbs the gradient at the pre-training weights and their network
//! retrains on the full selection history.

use crate::confidence::ConfidenceState;
use crate::context::{make_context, ArmDescription, Embedding};
use crate::mlp::{self, TrainingHistory};

use super::{
    choose_from_scores, net_seed, ArmScore, ArmState, Policy, PolicyConfig, PolicyError,
    SelectionTrace, StageObservation, TieBreak,
};

pub struct SeqBandits {
    alpha: Vec<f64>,
    nu: f64,
    eta: f64,
    gd_steps: usize,
    width: usize,
    tie_break: TieBreak,
    cost_term: bool,
    policy_seed: u64,
    descriptions: Vec<Vec<ArmDescription>>,
    arms: Vec<Vec<ArmState>>,
}

impl SeqBandits {
    pub fn new(
        config: &PolicyConfig,
        descriptions: Vec<Vec<ArmDescription>>,
        input_dim: usize,
        policy_seed: u64,
    ) -> Result<Self, PolicyError> {
        let arm_counts: Vec<usize> = descriptions.iter().map(|d| d.len()).collect();
        let alpha = config.validate(&arm_counts)?;
        let arch = config.arch(input_dim)?;
        let p = arch.param_count();

        let mut arms = Vec::with_capacity(descriptions.len());
        for (i, row) in descriptions.iter().enumerate() {
            let mut states = Vec::with_capacity(row.len());
            for _ in 0..row.len() {
                states.push(ArmState {
                    params: mlp::init_network(arch, net_seed(policy_seed, i))?,
                    confidence: ConfidenceState::init(p, config.lambda, config.matrix_mode)?,
                    history: TrainingHistory::new(),
                });
            }
            arms.push(states);
        }
        Ok(Self {
            alpha,
            nu: config.nu,
            eta: config.eta,
            gd_steps: config.gd_steps,
            width: config.hidden_width,
            tie_break: config.tie_break,
            cost_term: config.cost_term,
            policy_seed,
            descriptions,
            arms,
        })
    }

    pub fn arm_state(&self, subtask: usize, arm: usize) -> &ArmState {
        &self.arms[subtask][arm]
    }

    pub fn arm_state_mut(&mut self, subtask: usize, arm: usize) -> &mut ArmState {
        &mut self.arms[subtask][arm]
    }

    /// Total weight count across all arm networks of one subtask.
    pub fn subtask_parameter_count(&self, subtask: usize) -> usize {
        self.arms[subtask]
            .iter()
            .map(|s| s.params.param_count())
            .sum()
    }
}

impl Policy for SeqBandits {
    fn name(&self) -> &'static str {
        "seqbandits"
    }

    fn select(
        &self,
        t: usize,
        subtask: usize,
        prompt: &Embedding,
        predicted_costs: &[f64],
    ) -> Result<(usize, SelectionTrace), PolicyError> {
        let states = self
            .arms
            .get(subtask)
            .ok_or(PolicyError::UnknownSubtask(subtask))?;
        if predicted_costs.len() != states.len() {
            return Err(PolicyError::CostLengthMismatch {
                subtask,
                expected: states.len(),
                actual: predicted_costs.len(),
            });
        }
        let mut scores = Vec::with_capacity(states.len());
        for (j, state) in states.iter().enumerate() {
            let x = make_context(prompt, &self.descriptions[subtask][j].embedding)?;
            let estimate = mlp::forward(&state.params, &x)?;
            let g = mlp::gradient(&state.params, &x)?;
            let bonus = state.confidence.exploration_bonus(&g, self.width)?;
            let cost_penalty = if self.cost_term {
                self.alpha[subtask] * predicted_costs[j]
            } else {
                0.0
            };
            scores.push(ArmScore {
                estimate,
                bonus,
                cost_penalty,
                total: estimate + self.nu * bonus - cost_penalty,
            });
        }
        let chosen = choose_from_scores(&scores, self.tie_break, self.policy_seed, t, subtask);
        Ok((chosen, SelectionTrace { scores, chosen }))
    }

    fn observe_round(
        &mut self,
        _t: usize,
        observations: &[StageObservation],
    ) -> Result<(), PolicyError> {
        if observations.len() != self.arms.len() {
            return Err(PolicyError::ObservationMismatch {
                expected: self.arms.len(),
                actual: observations.len(),
            });
        }
        for obs in observations {
            let desc = &self.descriptions[obs.subtask][obs.arm];
            let x = make_context(&obs.prompt, &desc.embedding)?;
            let state = &mut self.arms[obs.subtask][obs.arm];
            // Confidence absorbs the gradient at the pre-training weights.
            let g = mlp::gradient(&state.params, &x)?;
            state.confidence.rank_one_update(&g, self.width)?;
            state.history.push(x, obs.reward);
            state.params = mlp::train(&state.params, &state.history, self.eta, self.gd_steps)?;
        }
        Ok(())
    }
}
