//! Cost-aware NeuralLinUCB baseline: a shared representation network per
//! subtask feeding a ridge-regression head.
//!
//! The feature map `φ(x)` is the last hidden activation of the subtask's
//! network. Ridge statistics `A = λI + Σ φφᵀ` and `b = Σ φ·r` accumulate
//! over the chosen arms' observations; the score is
//! `θ̂ᵀφ + nu·√(φᵀA⁻¹φ) - alpha_i·C_j` with `θ̂ = A⁻¹b`. The representation
//! retrains on the subtask's full history every `retrain_period` updates
//! (0 freezes it); accumulated statistics are kept across retrains.

use crate::confidence::ConfidenceState;
use crate::context::{make_context, ArmDescription, Embedding};
use crate::linalg::{axpy, dot};
use crate::mlp::{self, NetworkParams, TrainingHistory};

use super::{
    choose_from_scores, net_seed, ArmScore, Policy, PolicyConfig, PolicyError, SelectionTrace,
    StageObservation, TieBreak,
};

struct SubtaskState {
    representation: NetworkParams,
    ridge: ConfidenceState,
    reward_stats: Vec<f64>,
    history: TrainingHistory,
    updates: usize,
}

pub struct NeuralLinUcb {
    alpha: Vec<f64>,
    nu: f64,
    eta: f64,
    gd_steps: usize,
    retrain_period: usize,
    tie_break: TieBreak,
    cost_term: bool,
    policy_seed: u64,
    descriptions: Vec<Vec<ArmDescription>>,
    subtasks: Vec<SubtaskState>,
}

impl NeuralLinUcb {
    pub fn new(
        config: &PolicyConfig,
        descriptions: Vec<Vec<ArmDescription>>,
        input_dim: usize,
        policy_seed: u64,
    ) -> Result<Self, PolicyError> {
        let arm_counts: Vec<usize> = descriptions.iter().map(|d| d.len()).collect();
        let alpha = config.validate(&arm_counts)?;
        let arch = config.arch(input_dim)?;
        let width = config.hidden_width;

        let subtasks = (0..descriptions.len())
            .map(|i| {
                Ok(SubtaskState {
                    representation: mlp::init_network(arch, net_seed(policy_seed, i))?,
                    ridge: ConfidenceState::init(width, config.lambda, config.matrix_mode)?,
                    reward_stats: vec![0.0; width],
                    history: TrainingHistory::new(),
                    updates: 0,
                })
            })
            .collect::<Result<Vec<_>, PolicyError>>()?;
        Ok(Self {
            alpha,
            nu: config.nu,
            eta: config.eta,
            gd_steps: config.gd_steps,
            retrain_period: config.retrain_period,
            tie_break: config.tie_break,
            cost_term: config.cost_term,
            policy_seed,
            descriptions,
            subtasks,
        })
    }

    /// Ridge solution θ̂ = A⁻¹ b of one subtask's head.
    pub fn ridge_estimate(&self, subtask: usize) -> Result<Vec<f64>, PolicyError> {
        let state = &self.subtasks[subtask];
        Ok(state.ridge.inv_mat_vec(&state.reward_stats)?)
    }

    pub fn ridge_state(&self, subtask: usize) -> &ConfidenceState {
        &self.subtasks[subtask].ridge
    }

    pub fn reward_stats(&self, subtask: usize) -> &[f64] {
        &self.subtasks[subtask].reward_stats
    }

    pub fn representation(&self, subtask: usize) -> &NetworkParams {
        &self.subtasks[subtask].representation
    }

    /// Replaces a subtask's representation network; with `retrain_period` 0
    /// this freezes an arbitrary hand-set feature map.
    pub fn set_representation(&mut self, subtask: usize, params: NetworkParams) {
        self.subtasks[subtask].representation = params;
    }
}

impl Policy for NeuralLinUcb {
    fn name(&self) -> &'static str {
        "ca_neurallinucb"
    }

    fn select(
        &self,
        t: usize,
        subtask: usize,
        prompt: &Embedding,
        predicted_costs: &[f64],
    ) -> Result<(usize, SelectionTrace), PolicyError> {
        let state = self
            .subtasks
            .get(subtask)
            .ok_or(PolicyError::UnknownSubtask(subtask))?;
        let descs = &self.descriptions[subtask];
        if predicted_costs.len() != descs.len() {
            return Err(PolicyError::CostLengthMismatch {
                subtask,
                expected: descs.len(),
                actual: predicted_costs.len(),
            });
        }
        let theta_hat = state.ridge.inv_mat_vec(&state.reward_stats)?;
        let mut scores = Vec::with_capacity(descs.len());
        for (j, desc) in descs.iter().enumerate() {
            let x = make_context(prompt, &desc.embedding)?;
            let phi = mlp::hidden_features(&state.representation, &x)?;
            let estimate = dot(&theta_hat, &phi);
            let bonus = state.ridge.exploration_bonus(&phi, 1)?;
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
        if observations.len() != self.subtasks.len() {
            return Err(PolicyError::ObservationMismatch {
                expected: self.subtasks.len(),
                actual: observations.len(),
            });
        }
        for obs in observations {
            let desc = &self.descriptions[obs.subtask][obs.arm];
            let x = make_context(&obs.prompt, &desc.embedding)?;
            let state = &mut self.subtasks[obs.subtask];
            let phi = mlp::hidden_features(&state.representation, &x)?;
            state.ridge.rank_one_update(&phi, 1)?;
            axpy(obs.reward, &phi, &mut state.reward_stats);
            state.history.push(x, obs.reward);
            state.updates += 1;
            if self.retrain_period > 0 && state.updates % self.retrain_period == 0 {
                state.representation = mlp::train(
                    &state.representation,
                    &state.history,
                    self.eta,
                    self.gd_steps,
                )?;
            }
        }
        Ok(())
    }
}
