//! Cost-aware NeuralUCB baseline: one network and one confidence matrix per
//! subtask, scoring every arm of the subtask through the same network on
//! that arm's context.

use crate::confidence::ConfidenceState;
use crate::context::{make_context, ArmDescription, Embedding};
use crate::mlp::{self, TrainingHistory};

use super::{
    choose_from_scores, net_seed, ArmScore, ArmState, Policy, PolicyConfig, PolicyError,
    SelectionTrace, StageObservation, TieBreak,
};

pub struct NeuralUcb {
    alpha: Vec<f64>,
    nu: f64,
    eta: f64,
    gd_steps: usize,
    width: usize,
    tie_break: TieBreak,
    cost_term: bool,
    policy_seed: u64,
    descriptions: Vec<Vec<ArmDescription>>,
    subtasks: Vec<ArmState>,
}

impl NeuralUcb {
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

        let subtasks = (0..descriptions.len())
            .map(|i| {
                Ok(ArmState {
                    params: mlp::init_network(arch, net_seed(policy_seed, i))?,
                    confidence: ConfidenceState::init(p, config.lambda, config.matrix_mode)?,
                    history: TrainingHistory::new(),
                })
            })
            .collect::<Result<Vec<_>, PolicyError>>()?;
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
            subtasks,
        })
    }

    pub fn subtask_state(&self, subtask: usize) -> &ArmState {
        &self.subtasks[subtask]
    }

    /// Weight count of one subtask's single shared network.
    pub fn subtask_parameter_count(&self, subtask: usize) -> usize {
        self.subtasks[subtask].params.param_count()
    }
}

impl Policy for NeuralUcb {
    fn name(&self) -> &'static str {
        "ca_neuralucb"
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
        let mut scores = Vec::with_capacity(descs.len());
        for (j, desc) in descs.iter().enumerate() {
            let x = make_context(prompt, &desc.embedding)?;
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
            let g = mlp::gradient(&state.params, &x)?;
            state.confidence.rank_one_update(&g, self.width)?;
            state.history.push(x, obs.reward);
            state.params = mlp::train(&state.params, &state.history, self.eta, self.gd_steps)?;
        }
        Ok(())
    }
}
