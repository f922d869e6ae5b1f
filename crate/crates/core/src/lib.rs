//! Online selection of one model per stage of a sequential task pipeline.
//!
//! The library implements a neural contextual bandit that picks, for every
//! subtask in a fixed pipeline, the arm (candidate model) maximizing a
//! UCB-style score: a per-arm network's reward estimate, plus a gradient
//! confidence bonus, minus a cost penalty weighted by a per-subtask
//! sensitivity `alpha`. A simulated pipeline environment with hidden reward
//! functions, arm-dependent prompt transformations and token costs, plus an
//! experiment harness (CSV/JSON/SVG export, seed aggregation, brute-force
//! regret oracle) reproduce the learning dynamics at desk scale.
//!
//! Modules:
//! - [`mlp`]: minimal fully connected ReLU network (forward, exact
//!   backpropagation gradient, full-batch gradient-descent training).
//! - [`confidence`]: per-arm confidence matrix `Z` with Sherman-Morrison
//!   inverse maintenance and the exploration bonus `‖g/√n‖_{Z⁻¹}`.
//! - [`context`]: embeddings and the elementwise-product context vector.
//! - [`cost`]: token pricing and pluggable output-length prediction.
//! - [`env`]: the simulated pipeline environment and exhaustive oracle.
//! - [`policies`]: the sequential bandit plus all baselines.
//! - [`harness`]: experiment runner, aggregation and export.

pub mod confidence;
pub mod context;
pub mod cost;
pub mod env;
pub mod harness;
mod linalg;
pub mod mlp;
pub mod policies;
pub mod rng;

pub use confidence::{ConfidenceState, MatrixMode};
pub use context::{ArmDescription, ArmId, ContextVector, Embedding};
pub use cost::{OutputLengthPredictor, TokenPricing};
pub use env::{Combinator, Environment, PipelineSpec, RewardFamily, SimulatedArm, StageOutcome};
pub use harness::{ExperimentConfig, RoundRecord, RunOutput, RunSummary};
pub use mlp::{NetworkArch, NetworkParams, TrainingHistory};
pub use policies::{Policy, PolicyConfig, PolicyName, SelectionTrace};
