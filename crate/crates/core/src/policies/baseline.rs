//! Non-learning baselines: seeded-uniform random selection and a fixed arm
//! per subtask.

use rand::Rng;

use crate::context::{ArmDescription, Embedding};
use crate::rng::{chacha, mix, stream};

use super::{ArmScore, Policy, PolicyConfig, PolicyError, SelectionTrace, StageObservation};

pub struct RandomPolicy {
    arm_counts: Vec<usize>,
    policy_seed: u64,
}

impl RandomPolicy {
    pub fn new(
        config: &PolicyConfig,
        descriptions: &[Vec<ArmDescription>],
        policy_seed: u64,
    ) -> Result<Self, PolicyError> {
        let arm_counts: Vec<usize> = descriptions.iter().map(|d| d.len()).collect();
        config.validate(&arm_counts)?;
        Ok(Self {
            arm_counts,
            policy_seed,
        })
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(
        &self,
        t: usize,
        subtask: usize,
        _prompt: &Embedding,
        predicted_costs: &[f64],
    ) -> Result<(usize, SelectionTrace), PolicyError> {
        let count = *self
            .arm_counts
            .get(subtask)
            .ok_or(PolicyError::UnknownSubtask(subtask))?;
        if predicted_costs.len() != count {
            return Err(PolicyError::CostLengthMismatch {
                subtask,
                expected: count,
                actual: predicted_costs.len(),
            });
        }
        let mut rng = chacha(mix(&[
            self.policy_seed,
            stream::RANDOM_POLICY,
            t as u64,
            subtask as u64,
        ]));
        let chosen = rng.gen_range(0..count);
        Ok((
            chosen,
            SelectionTrace {
                scores: vec![ArmScore::ZERO; count],
                chosen,
            },
        ))
    }

    fn observe_round(
        &mut self,
        _t: usize,
        _observations: &[StageObservation],
    ) -> Result<(), PolicyError> {
        Ok(())
    }
}

pub struct FixedPolicy {
    arms: Vec<usize>,
    arm_counts: Vec<usize>,
}

impl FixedPolicy {
    pub fn new(
        config: &PolicyConfig,
        descriptions: &[Vec<ArmDescription>],
    ) -> Result<Self, PolicyError> {
        let arm_counts: Vec<usize> = descriptions.iter().map(|d| d.len()).collect();
        config.validate(&arm_counts)?;
        let arms = config
            .fixed_arms
            .clone()
            .ok_or_else(|| PolicyError::InvalidConfig {
                field: "fixed_arms".into(),
                reason: "the fixed policy needs one pinned arm per subtask".into(),
            })?;
        Ok(Self { arms, arm_counts })
    }
}

impl Policy for FixedPolicy {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn select(
        &self,
        _t: usize,
        subtask: usize,
        _prompt: &Embedding,
        predicted_costs: &[f64],
    ) -> Result<(usize, SelectionTrace), PolicyError> {
        let count = *self
            .arm_counts
            .get(subtask)
            .ok_or(PolicyError::UnknownSubtask(subtask))?;
        if predicted_costs.len() != count {
            return Err(PolicyError::CostLengthMismatch {
                subtask,
                expected: count,
                actual: predicted_costs.len(),
            });
        }
        let chosen = self.arms[subtask];
        Ok((
            chosen,
            SelectionTrace {
                scores: vec![ArmScore::ZERO; count],
                chosen,
            },
        ))
    }

    fn observe_round(
        &mut self,
        _t: usize,
        _observations: &[StageObservation],
    ) -> Result<(), PolicyError> {
        Ok(())
    }
}
