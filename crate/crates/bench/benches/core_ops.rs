//! Hot-path benchmarks: forward/gradient evaluation, confidence-matrix
//! maintenance at the default parameter count, and a full experiment round.

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use seqpipe_core::confidence::{ConfidenceState, MatrixMode};
use seqpipe_core::context::ContextVector;
use seqpipe_core::env::{default_spec, Environment};
use seqpipe_core::harness::{run_experiment, ExperimentConfig, PolicyBlock};
use seqpipe_core::mlp::{self, NetworkArch};
use seqpipe_core::policies::{PolicyConfig, PolicyName};

fn default_context(dim: usize) -> ContextVector {
    let mag = 1.0 / (dim as f64).sqrt();
    ContextVector::new((0..dim).map(|i| if i % 2 == 0 { mag } else { -mag }).collect())
}

fn bench_network(c: &mut Criterion) {
    let arch = NetworkArch::new(32, 50, 1).unwrap();
    let params = mlp::init_network(arch, 7).unwrap();
    let x = default_context(32);
    c.bench_function("mlp_forward_d32_n50", |b| {
        b.iter(|| mlp::forward(black_box(&params), black_box(&x)).unwrap())
    });
    c.bench_function("mlp_gradient_d32_n50", |b| {
        b.iter(|| mlp::gradient(black_box(&params), black_box(&x)).unwrap())
    });
}

fn bench_confidence(c: &mut Criterion) {
    let arch = NetworkArch::new(32, 50, 1).unwrap();
    let p = arch.param_count();
    let params = mlp::init_network(arch, 7).unwrap();
    let x = default_context(32);
    let g = mlp::gradient(&params, &x).unwrap();

    let mut warm = ConfidenceState::init(p, 1.0, MatrixMode::Exact).unwrap();
    for _ in 0..10 {
        warm.rank_one_update(&g, 50).unwrap();
    }
    c.bench_function("exploration_bonus_p1650", |b| {
        b.iter(|| warm.exploration_bonus(black_box(&g), 50).unwrap())
    });
    c.bench_function("rank_one_update_p1650", |b| {
        b.iter_batched(
            || warm.clone(),
            |mut state| state.rank_one_update(black_box(&g), 50).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_round(c: &mut Criterion) {
    let mut spec = default_spec();
    spec.horizon = 5;
    let config = ExperimentConfig {
        spec,
        policy: PolicyBlock {
            name: PolicyName::Seqbandits,
            config: PolicyConfig::default(),
        },
        predictor: None,
        seeds: vec![1],
        out_dir: None,
        enumeration_cap: 10_000,
    };
    // Constructing the environment and playing five rounds, dominated by
    // per-arm scoring over the p ~ 1650 confidence matrices.
    c.bench_function("seqbandits_five_rounds_default_spec", |b| {
        b.iter(|| run_experiment(black_box(&config), 1).unwrap())
    });

    let env = Environment::new(default_spec()).unwrap();
    let (query, _) = env.next_query(1);
    c.bench_function("oracle_best_enumeration_4x4", |b| {
        b.iter(|| env.oracle_best(black_box(&query), 10_000).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_network, bench_confidence, bench_round
}
criterion_main!(benches);
