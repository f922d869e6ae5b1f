//! Experiment runner: binds a pipeline spec, a policy, seeds and cost
//! weights; runs the online loop; records per-round metrics; aggregates
//! across seeds.
//!
//! Per round: the query arrives, each subtask in order scores its arms on
//! predicted costs (input counts are known, output counts predicted), the
//! chosen arm executes and its output prompt and token count feed the next
//! stage. After the pipeline, the policy sees all base rewards and updates.
//! The regret increment compares the noiseless oracle-best super arm against
//! the realized (noisy) super reward, so lucky rounds can go slightly
//! negative. Net reward subtracts alpha-weighted *realized* cost while
//! selection acts on predictions; both appear in the record.

mod config;
mod export;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::context::ArmId;
use crate::cost::{predicted_cost, CostError, OutputLengthPredictor};
use crate::env::{EnvError, Environment};
use crate::policies::{build_policy, PolicyError, StageObservation};
use crate::rng::{chacha, mix, stream};

pub use config::{ConfigError, ExperimentConfig, PolicyBlock};
pub use export::{
    export_experiment, write_curves_svg, write_rounds_csv, write_summary_json,
    ExperimentSummary, PerRoundAggregates, PolicyCurves,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("non-finite {metric} ({value}) at round {t}")]
    NonFiniteMetric {
        metric: &'static str,
        t: usize,
        value: f64,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Per-round trace of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: usize,
    /// Chosen super arm, one index per subtask.
    pub choices: Vec<usize>,
    pub base_rewards: Vec<f64>,
    pub super_reward: f64,
    /// Predicted cost of the chosen arm per stage.
    pub predicted_costs: Vec<f64>,
    /// Realized cost per stage.
    pub realized_costs: Vec<f64>,
    /// super_reward - sum_i alpha_i * realized_cost_i.
    pub net_reward: f64,
    /// Noiseless value of the oracle-best super arm.
    pub oracle_reward: f64,
    pub regret_increment: f64,
}

/// Cumulative series and selection counts of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub cum_net_reward: Vec<f64>,
    pub cum_cost: Vec<f64>,
    pub cum_regret: Vec<f64>,
    /// Times each arm was chosen, indexed [subtask][arm]; rows sum to T.
    pub selection_counts: Vec<Vec<u64>>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub rounds: Vec<RoundRecord>,
}

/// Pointwise mean and population standard deviation across runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSeries {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Executes the online loop for one seed; deterministic per (config, seed).
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, RunError> {
    let started = Instant::now();
    let env = Environment::new(config.spec.clone())?;
    let predictor: OutputLengthPredictor = config
        .predictor
        .clone()
        .unwrap_or_else(|| env.matched_predictor());
    let arm_counts = config.spec.arms_per_subtask();
    let alpha = config.policy.config.validate(&arm_counts)?;
    let policy_seed = mix(&[seed, stream::POLICY]);
    let mut policy = build_policy(
        config.policy.name,
        &config.policy.config,
        env.descriptions(),
        config.spec.embedding_dim,
        policy_seed,
    )?;

    let k = env.k();
    let horizon = config.spec.horizon;
    let mut rounds = Vec::with_capacity(horizon);
    let mut cum_net_reward = Vec::with_capacity(horizon);
    let mut cum_cost = Vec::with_capacity(horizon);
    let mut cum_regret = Vec::with_capacity(horizon);
    let mut selection_counts: Vec<Vec<u64>> =
        arm_counts.iter().map(|&n| vec![0u64; n]).collect();
    let (mut net_acc, mut cost_acc, mut regret_acc) = (0.0, 0.0, 0.0);

    for t in 1..=horizon {
        let (query, query_tokens) = env.next_query(t);
        let mut prompt = query.clone();
        let mut input_tokens = query_tokens;

        let mut choices = Vec::with_capacity(k);
        let mut base_rewards = Vec::with_capacity(k);
        let mut stage_predicted = Vec::with_capacity(k);
        let mut stage_realized = Vec::with_capacity(k);
        let mut observations = Vec::with_capacity(k);

        for i in 0..k {
            let costs: Vec<f64> = env.arms()[i]
                .iter()
                .map(|arm| predicted_cost(arm.pricing, &predictor, arm.id, input_tokens))
                .collect::<Result<_, _>>()?;
            let (choice, _trace) = policy.select(t, i, &prompt, &costs)?;
            let arm = env.arm(ArmId::new(i, choice))?;
            let mut stage_rng = chacha(mix(&[seed, stream::NOISE, t as u64, i as u64]));
            let outcome = env.stage_step(arm, &prompt, input_tokens, &mut stage_rng)?;

            selection_counts[i][choice] += 1;
            choices.push(choice);
            base_rewards.push(outcome.reward);
            stage_predicted.push(costs[choice]);
            stage_realized.push(outcome.realized_cost);
            observations.push(StageObservation {
                subtask: i,
                arm: choice,
                prompt: prompt.clone(),
                reward: outcome.reward,
            });
            prompt = outcome.next_prompt;
            input_tokens = outcome.output_tokens;
        }

        let super_reward = env.super_reward(&base_rewards)?;
        let (_, oracle_reward) = env.oracle_best(&query, config.enumeration_cap)?;
        let weighted_cost: f64 = alpha
            .iter()
            .zip(&stage_realized)
            .map(|(a, c)| a * c)
            .sum();
        let net_reward = super_reward - weighted_cost;
        let regret_increment = oracle_reward - super_reward;
        for (metric, value) in [
            ("super_reward", super_reward),
            ("net_reward", net_reward),
            ("oracle_reward", oracle_reward),
        ] {
            if !value.is_finite() {
                return Err(RunError::NonFiniteMetric { metric, t, value });
            }
        }

        policy.observe_round(t, &observations)?;

        net_acc += net_reward;
        cost_acc += stage_realized.iter().sum::<f64>();
        regret_acc += regret_increment;
        cum_net_reward.push(net_acc);
        cum_cost.push(cost_acc);
        cum_regret.push(regret_acc);
        rounds.push(RoundRecord {
            t,
            choices,
            base_rewards,
            super_reward,
            predicted_costs: stage_predicted,
            realized_costs: stage_realized,
            net_reward,
            oracle_reward,
            regret_increment,
        });
    }

    Ok(RunOutput {
        summary: RunSummary {
            seed,
            cum_net_reward,
            cum_cost,
            cum_regret,
            selection_counts,
            runtime_seconds: started.elapsed().as_secs_f64(),
        },
        rounds,
    })
}

/// Worker count: `SEQPIPE_THREADS` when set, otherwise the machine's
/// parallelism, never more than the number of seeds.
fn worker_count(seed_count: usize) -> usize {
    let configured = std::env::var("SEQPIPE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
    configured.clamp(1, seed_count.max(1))
}

/// Runs every configured seed, in parallel workers, preserving seed order.
pub fn run_all_seeds(config: &ExperimentConfig) -> Result<Vec<RunOutput>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config.seeds.len()))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_experiment(config, seed))
            .collect()
    })
}

/// Pointwise mean and population standard deviation of equal-length series.
pub fn aggregate(series: &[&[f64]]) -> AggregateSeries {
    assert!(!series.is_empty(), "nothing to aggregate");
    let len = series[0].len();
    assert!(
        series.iter().all(|s| s.len() == len),
        "series lengths differ"
    );
    let count = series.len() as f64;
    let mut mean = vec![0.0; len];
    for s in series {
        for (m, v) in mean.iter_mut().zip(*s) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= count;
    }
    let mut std = vec![0.0; len];
    for s in series {
        for ((sd, v), m) in std.iter_mut().zip(*s).zip(&mean) {
            *sd += (v - m) * (v - m);
        }
    }
    for sd in std.iter_mut() {
        *sd = (*sd / count).sqrt();
    }
    AggregateSeries { mean, std }
}

/// Mean selection counts across runs; each row still sums to T.
pub fn mean_selection_counts(outputs: &[RunOutput]) -> Vec<Vec<f64>> {
    assert!(!outputs.is_empty());
    let template = &outputs[0].summary.selection_counts;
    let mut counts: Vec<Vec<f64>> = template
        .iter()
        .map(|row| vec![0.0; row.len()])
        .collect();
    for out in outputs {
        for (acc, row) in counts.iter_mut().zip(&out.summary.selection_counts) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += *v as f64;
            }
        }
    }
    let n = outputs.len() as f64;
    for row in counts.iter_mut() {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    counts
}

/// Bundles the three cumulative aggregates of a set of runs.
pub fn aggregate_runs(outputs: &[RunOutput]) -> PerRoundAggregates {
    let net: Vec<&[f64]> = outputs
        .iter()
        .map(|o| o.summary.cum_net_reward.as_slice())
        .collect();
    let cost: Vec<&[f64]> = outputs
        .iter()
        .map(|o| o.summary.cum_cost.as_slice())
        .collect();
    let regret: Vec<&[f64]> = outputs
        .iter()
        .map(|o| o.summary.cum_regret.as_slice())
        .collect();
    PerRoundAggregates {
        cum_net_reward: aggregate(&net),
        cum_cost: aggregate(&cost),
        cum_regret: aggregate(&regret),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_single_run_has_zero_std() {
        let s = vec![1.0, 2.0, 3.0];
        let agg = aggregate(&[&s]);
        assert_eq!(agg.mean, s);
        assert!(agg.std.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn aggregate_two_runs_hand_case() {
        let a = vec![0.0, 0.0];
        let b = vec![2.0, 2.0];
        let agg = aggregate(&[&a, &b]);
        assert_eq!(agg.mean, vec![1.0, 1.0]);
        assert_eq!(agg.std, vec![1.0, 1.0]);
    }

    #[test]
    fn aggregate_matches_independent_recomputation() {
        // Spreadsheet-style recomputation over a few random series.
        use rand::Rng;
        let mut rng = crate::rng::chacha(31);
        let runs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..40).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = runs.iter().map(|r| r.as_slice()).collect();
        let agg = aggregate(&refs);
        for t in 0..40 {
            let vals: Vec<f64> = runs.iter().map(|r| r[t]).collect();
            let mean = vals.iter().sum::<f64>() / 5.0;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 5.0;
            assert!((agg.mean[t] - mean).abs() < 1e-12);
            assert!((agg.std[t] - var.sqrt()).abs() < 1e-12);
        }
    }
}
