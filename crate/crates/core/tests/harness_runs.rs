//! End-to-end runner checks: forced choices, determinism, metric identities
//! and export round-trips on small pipelines.

use std::fs;

use seqpipe_core::env::{
    ArmSpec, Combinator, PipelineSpec, RewardFamily, SubtaskSpec, TransformKind,
};
use seqpipe_core::harness::{
    aggregate_runs, export_experiment, mean_selection_counts, run_all_seeds, run_experiment,
    ExperimentConfig, PolicyBlock,
};
use seqpipe_core::policies::{PolicyConfig, PolicyName};

fn small_spec(k: usize, arms: usize, noise_std: f64, horizon: usize) -> PipelineSpec {
    PipelineSpec {
        embedding_dim: 8,
        subtasks: (0..k)
            .map(|_| SubtaskSpec {
                arms: vec![
                    ArmSpec {
                        reward_family: RewardFamily::Linear,
                        transform: TransformKind::SignedPermutation,
                        ..ArmSpec::default()
                    };
                    arms
                ],
            })
            .collect(),
        noise_std,
        combinator: Combinator::LastOnly,
        horizon,
        query_stream_seed: 3,
        env_seed: 4,
        input_token_range: (100, 300),
        query_bias: 0.0,
    }
}

fn config(spec: PipelineSpec, name: PolicyName, seeds: Vec<u64>) -> ExperimentConfig {
    let mut policy = PolicyConfig {
        hidden_width: 6,
        ..PolicyConfig::default()
    };
    if name == PolicyName::Fixed {
        policy.fixed_arms = Some(vec![0; spec.k()]);
    }
    ExperimentConfig {
        spec,
        policy: PolicyBlock {
            name,
            config: policy,
        },
        predictor: None,
        seeds,
        out_dir: None,
        enumeration_cap: 10_000,
    }
}

#[test]
fn forced_single_arm_has_zero_regret_without_noise() {
    let cfg = config(small_spec(1, 1, 0.0, 10), PolicyName::Seqbandits, vec![1]);
    let out = run_experiment(&cfg, 1).unwrap();
    for r in &out.rounds {
        assert_eq!(r.choices, vec![0]);
        assert!(r.regret_increment.abs() < 1e-12, "round {}", r.t);
    }
    assert_eq!(out.summary.selection_counts, vec![vec![10]]);
}

#[test]
fn identical_config_and_seed_reproduce_bit_identical_records() {
    let cfg = config(small_spec(2, 3, 0.1, 30), PolicyName::Seqbandits, vec![7]);
    let a = run_experiment(&cfg, 7).unwrap();
    let b = run_experiment(&cfg, 7).unwrap();
    assert_eq!(a.rounds, b.rounds);
    assert_eq!(a.summary.cum_regret, b.summary.cum_regret);
}

#[test]
fn net_reward_identity_holds_each_round() {
    let mut cfg = config(small_spec(2, 2, 0.1, 40), PolicyName::Random, vec![3]);
    cfg.policy.config.alpha = vec![10.0, 20.0];
    let out = run_experiment(&cfg, 3).unwrap();
    for r in &out.rounds {
        let weighted: f64 = r
            .realized_costs
            .iter()
            .zip(&[10.0, 20.0])
            .map(|(c, a)| c * a)
            .sum();
        assert!((r.net_reward - (r.super_reward - weighted)).abs() < 1e-12);
    }
}

#[test]
fn cumulative_cost_monotone_and_noiseless_regret_monotone() {
    let cfg = config(small_spec(2, 3, 0.0, 60), PolicyName::Random, vec![2]);
    let out = run_experiment(&cfg, 2).unwrap();
    let mut prev_cost = 0.0;
    let mut prev_regret = 0.0;
    for (c, r) in out
        .summary
        .cum_cost
        .iter()
        .zip(&out.summary.cum_regret)
    {
        assert!(*c >= prev_cost);
        assert!(*r >= prev_regret - 1e-12);
        prev_cost = *c;
        prev_regret = *r;
    }
}

#[test]
fn oracle_value_dominates_noiseless_policy_choice() {
    let cfg = config(small_spec(2, 3, 0.0, 50), PolicyName::Random, vec![9]);
    let out = run_experiment(&cfg, 9).unwrap();
    for r in &out.rounds {
        // Noiseless rewards: realized super reward is the noiseless value.
        assert!(r.oracle_reward >= r.super_reward - 1e-12, "round {}", r.t);
    }
}

#[test]
fn selection_counts_sum_to_horizon() {
    let cfg = config(small_spec(3, 2, 0.1, 25), PolicyName::Random, vec![5]);
    let out = run_experiment(&cfg, 5).unwrap();
    for row in &out.summary.selection_counts {
        assert_eq!(row.iter().sum::<u64>(), 25);
    }
}

#[test]
fn run_all_seeds_preserves_seed_order_and_parallel_determinism() {
    let cfg = config(small_spec(2, 2, 0.1, 20), PolicyName::Seqbandits, vec![11, 3, 8]);
    let outs = run_all_seeds(&cfg).unwrap();
    assert_eq!(
        outs.iter().map(|o| o.summary.seed).collect::<Vec<_>>(),
        vec![11, 3, 8]
    );
    // Each equals its sequential counterpart.
    for out in &outs {
        let solo = run_experiment(&cfg, out.summary.seed).unwrap();
        assert_eq!(solo.rounds, out.rounds);
    }
}

#[test]
fn export_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let horizon = 15;
    let cfg = config(
        small_spec(2, 2, 0.1, horizon),
        PolicyName::Seqbandits,
        vec![1, 2],
    );
    let outs = run_all_seeds(&cfg).unwrap();
    export_experiment(&cfg, &outs, dir.path(), 1.25).unwrap();

    let csv = fs::read_to_string(dir.path().join("seed_1/rounds.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), horizon + 1, "T rows plus header");
    assert_eq!(
        lines[0],
        "t,choice_1,choice_2,r_1,r_2,super_reward,predicted_cost,realized_cost,\
         net_reward,oracle_reward,regret_increment,cum_regret,cum_net_reward,cum_cost"
    );

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    // Selection counts sum to the horizon per subtask.
    for row in summary["selection_counts"].as_array().unwrap() {
        let total: f64 = row
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .sum();
        assert!((total - horizon as f64).abs() < 1e-9);
    }
    assert!(summary["config"]["spec"]["horizon"].as_u64().unwrap() == horizon as u64);
    assert!(summary["runtime_seconds"].as_f64().unwrap() > 0.0);

    let svg = fs::read_to_string(dir.path().join("curves.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("cumulative net reward"));
}

#[test]
fn csv_reload_recomputes_summary_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        small_spec(2, 3, 0.2, 40),
        PolicyName::Random,
        vec![4, 9, 13],
    );
    let outs = run_all_seeds(&cfg).unwrap();
    export_experiment(&cfg, &outs, dir.path(), 0.5).unwrap();

    // Reload every per-seed CSV and recompute the cumulative series.
    let mut all_nets = Vec::new();
    let mut all_costs = Vec::new();
    let mut all_regrets = Vec::new();
    for seed in [4u64, 9, 13] {
        let csv =
            fs::read_to_string(dir.path().join(format!("seed_{seed}/rounds.csv"))).unwrap();
        let mut nets = Vec::new();
        let mut costs = Vec::new();
        let mut regrets = Vec::new();
        let (mut cn, mut cc, mut cr) = (0.0f64, 0.0f64, 0.0f64);
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            // Columns: t, c1, c2, r1, r2, super, pred, realized, net,
            // oracle, regret_inc, cum_regret, cum_net, cum_cost.
            let realized: f64 = fields[7].parse().unwrap();
            let net: f64 = fields[8].parse().unwrap();
            let regret: f64 = fields[10].parse().unwrap();
            cn += net;
            cc += realized;
            cr += regret;
            nets.push(cn);
            costs.push(cc);
            regrets.push(cr);
            // And the cum columns themselves match.
            assert!((fields[11].parse::<f64>().unwrap() - cr).abs() < 1e-9);
            assert!((fields[12].parse::<f64>().unwrap() - cn).abs() < 1e-9);
            assert!((fields[13].parse::<f64>().unwrap() - cc).abs() < 1e-9);
        }
        all_nets.push(nets);
        all_costs.push(costs);
        all_regrets.push(regrets);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let t = 40;
    for (key, series) in [
        ("cum_net_reward", &all_nets),
        ("cum_cost", &all_costs),
        ("cum_regret", &all_regrets),
    ] {
        let means = summary["per_round"][key]["mean"].as_array().unwrap();
        let stds = summary["per_round"][key]["std"].as_array().unwrap();
        assert_eq!(means.len(), t);
        for i in 0..t {
            let vals: Vec<f64> = series.iter().map(|s| s[i]).collect();
            let mean = vals.iter().sum::<f64>() / 3.0;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
            assert!(
                (means[i].as_f64().unwrap() - mean).abs() < 1e-9,
                "{key} mean at {i}"
            );
            assert!(
                (stds[i].as_f64().unwrap() - var.sqrt()).abs() < 1e-9,
                "{key} std at {i}"
            );
        }
    }
}

#[test]
fn byte_identical_exports_across_repeated_runs() {
    let cfg = config(small_spec(2, 2, 0.15, 25), PolicyName::Seqbandits, vec![6]);
    let mut blobs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let outs = run_all_seeds(&cfg).unwrap();
        export_experiment(&cfg, &outs, dir.path(), 0.0).unwrap();
        blobs.push(fs::read(dir.path().join("seed_6/rounds.csv")).unwrap());
    }
    assert_eq!(blobs[0], blobs[1]);
}

#[test]
fn aggregates_are_consistent_with_outputs() {
    let cfg = config(small_spec(1, 2, 0.1, 12), PolicyName::Random, vec![1, 2]);
    let outs = run_all_seeds(&cfg).unwrap();
    let agg = aggregate_runs(&outs);
    let last = 11;
    let expect = (outs[0].summary.cum_regret[last] + outs[1].summary.cum_regret[last]) / 2.0;
    assert!((agg.cum_regret.mean[last] - expect).abs() < 1e-12);
    let counts = mean_selection_counts(&outs);
    assert!((counts[0].iter().sum::<f64>() - 12.0).abs() < 1e-9);
}

#[test]
fn enumeration_cap_error_propagates() {
    let mut cfg = config(small_spec(2, 4, 0.0, 5), PolicyName::Random, vec![1]);
    cfg.enumeration_cap = 10;
    assert!(cfg.validate().is_err());
    // And at runtime if validation is skipped.
    assert!(run_experiment(&cfg, 1).is_err());
}
