//! Simulated k-stage pipeline of arms with hidden reward functions.
//!
//! Each arm owns a hidden unit vector parameterizing its reward function, a
//! fixed orthogonal prompt transformation (so the stage-1 choice reshapes
//! stage-2 contexts), an output-token law, and per-token pricing. Rewards
//! are a family function of the context/hidden-vector inner product,
//! perturbed by Gaussian noise and clipped to [0, 1].
//!
//! All randomness is counter-based: queries are a pure function of
//! `(query_stream_seed, t)`, and per-round noise streams are derived from
//! the run seed by the harness, so policies compared under the same seed
//! face identical draws regardless of which arms they pick. The exhaustive
//! oracle rolls every super arm forward with noise suppressed and never
//! touches the run's streams.
//!
//! Query embeddings are equal-magnitude sign vectors (`±1/√d`, unit norm),
//! optionally with sign probabilities drifted along a fixed direction. With
//! magnitude-preserving arm transforms this keeps every context at the
//! constant norm `1/√d`, which the bias-free reward networks need: on a
//! fixed-radius shell their positively homogeneous function class can
//! express the constant offsets of the reward families.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{make_context, synth_embedding, ArmDescription, ArmId, Embedding};
use crate::cost::{builtin_pricing, realized_cost, OutputLengthPredictor, TokenPricing};
use crate::linalg;
use crate::rng::{chacha, mix, stream};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("prompt dimension {actual} does not match embedding_dim {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("base reward list has {actual} entries, pipeline has {expected} subtasks")]
    RewardLengthMismatch { expected: usize, actual: usize },
    #[error("super-arm enumeration needs {combos} rollouts, cap is {cap}")]
    EnumerationCapExceeded { combos: usize, cap: usize },
    #[error("unknown arm {0}")]
    UnknownArm(ArmId),
}

/// Shape of an arm's hidden mean-reward function of `s = xᵀa`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardFamily {
    #[default]
    Linear,
    Quadratic,
    Cosine,
}

impl RewardFamily {
    /// The noiseless mean reward given the context/hidden inner product.
    pub fn mean(self, s: f64) -> f64 {
        match self {
            Self::Linear => (s + 1.0) / 2.0,
            Self::Quadratic => s * s,
            Self::Cosine => ((3.0 * s).cos() + 1.0) / 2.0,
        }
    }
}

/// How base arm rewards combine into the super-arm reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Combinator {
    /// Only the final subtask's reward counts (diagnosis-style pipelines).
    LastOnly,
    /// Weighted sum of the per-stage rewards (question/explanation-style).
    WeightedSum { weights: Vec<f64> },
}

/// Mean and symmetric integer jitter of an arm's output token count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputTokenLaw {
    pub mean: u64,
    pub jitter: u64,
}

/// Either a built-in price-point name or explicit per-token prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PricingRef {
    Named(String),
    Explicit(TokenPricing),
}

impl PricingRef {
    pub fn resolve(&self) -> Result<TokenPricing, EnvError> {
        match self {
            Self::Named(name) => builtin_pricing(name).ok_or_else(|| EnvError::InvalidSpec {
                field: "pricing".into(),
                reason: format!("unknown built-in price point `{name}`"),
            }),
            Self::Explicit(p) => {
                TokenPricing::new(p.input_price, p.output_price).map_err(|e| {
                    EnvError::InvalidSpec {
                        field: "pricing".into(),
                        reason: e.to_string(),
                    }
                })
            }
        }
    }
}

fn default_pricing_ref() -> PricingRef {
    PricingRef::Named("gpt-3.5-turbo".into())
}

fn default_token_law() -> OutputTokenLaw {
    OutputTokenLaw {
        mean: 400,
        jitter: 50,
    }
}

/// How an arm maps its input prompt embedding to the next stage's prompt.
/// All kinds are orthogonal and magnitude-preserving, so downstream
/// contexts keep constant norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// A seeded signed coordinate permutation reshuffling every coordinate.
    #[default]
    SignedPermutation,
    /// Passes the prompt through unchanged; stages decouple except for
    /// token counts.
    Identity,
    /// Swaps a seeded set of disjoint coordinate pairs and leaves the rest
    /// alone: a mild reshaping that shifts downstream scores without
    /// erasing their structure.
    PairSwap { pairs: usize },
}

/// Per-arm construction knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    #[serde(default)]
    pub reward_family: RewardFamily,
    #[serde(default = "default_pricing_ref")]
    pub pricing: PricingRef,
    #[serde(default = "default_token_law")]
    pub output_tokens: OutputTokenLaw,
    /// 0 = fully arm-specific hidden reward function; 1 = fully aligned with
    /// the query-bias direction, which lifts this arm's mean reward when the
    /// query stream is biased.
    #[serde(default)]
    pub alignment: f64,
    #[serde(default)]
    pub transform: TransformKind,
    /// Description label; defaults to `s<i>-a<j>`. Arms sharing a tag share
    /// a description embedding (the same model offered at several stages).
    #[serde(default)]
    pub tag: Option<String>,
}

impl Default for ArmSpec {
    fn default() -> Self {
        Self {
            reward_family: RewardFamily::Linear,
            pricing: default_pricing_ref(),
            output_tokens: default_token_law(),
            alignment: 0.0,
            transform: TransformKind::default(),
            tag: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubtaskSpec {
    pub arms: Vec<ArmSpec>,
}

fn default_embedding_dim() -> usize {
    32
}

fn default_query_stream_seed() -> u64 {
    42
}

fn default_env_seed() -> u64 {
    7
}

fn default_input_token_range() -> (u64, u64) {
    (500, 1500)
}

/// Everything needed to build the simulated pipeline world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    pub subtasks: Vec<SubtaskSpec>,
    pub noise_std: f64,
    pub combinator: Combinator,
    /// Number of rounds T.
    pub horizon: usize,
    #[serde(default = "default_query_stream_seed")]
    pub query_stream_seed: u64,
    #[serde(default = "default_env_seed")]
    pub env_seed: u64,
    #[serde(default = "default_input_token_range")]
    pub input_token_range: (u64, u64),
    /// Strength of a fixed drift direction mixed into every query embedding;
    /// 0 keeps the query stream isotropic.
    #[serde(default)]
    pub query_bias: f64,
}

impl PipelineSpec {
    pub fn k(&self) -> usize {
        self.subtasks.len()
    }

    pub fn arms_per_subtask(&self) -> Vec<usize> {
        self.subtasks.iter().map(|s| s.arms.len()).collect()
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |field: &str, reason: String| {
            Err(EnvError::InvalidSpec {
                field: field.into(),
                reason,
            })
        };
        if self.embedding_dim == 0 {
            return fail("embedding_dim", "must be at least 1".into());
        }
        if self.subtasks.is_empty() {
            return fail("subtasks", "pipeline needs at least one subtask".into());
        }
        for (i, sub) in self.subtasks.iter().enumerate() {
            if sub.arms.is_empty() {
                return fail("subtasks", format!("subtask {i} has no arms"));
            }
            for (j, arm) in sub.arms.iter().enumerate() {
                if !(0.0..=1.0).contains(&arm.alignment) {
                    return fail(
                        "alignment",
                        format!("arm ({i},{j}) alignment {} outside [0, 1]", arm.alignment),
                    );
                }
                if let Some(tag) = &arm.tag {
                    if tag.is_empty() {
                        return fail("tag", format!("arm ({i},{j}) has an empty tag"));
                    }
                }
                arm.pricing.resolve()?;
            }
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return fail("noise_std", format!("{} is not a valid std", self.noise_std));
        }
        if let Combinator::WeightedSum { weights } = &self.combinator {
            if weights.len() != self.k() {
                return fail(
                    "combinator.weights",
                    format!("{} weights for {} subtasks", weights.len(), self.k()),
                );
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return fail("combinator.weights", "weights must be non-negative".into());
            }
        }
        if self.horizon == 0 {
            return fail("horizon", "must be at least 1".into());
        }
        if self.input_token_range.0 > self.input_token_range.1 {
            return fail(
                "input_token_range",
                format!(
                    "lower bound {} exceeds upper bound {}",
                    self.input_token_range.0, self.input_token_range.1
                ),
            );
        }
        if !(self.query_bias.is_finite() && self.query_bias >= 0.0) {
            return fail("query_bias", format!("{} must be >= 0", self.query_bias));
        }
        Ok(())
    }
}

/// One instantiated arm: reward function, prompt transform, token law.
#[derive(Debug, Clone)]
pub struct SimulatedArm {
    pub id: ArmId,
    pub description: ArmDescription,
    pub hidden_vector: Vec<f64>,
    /// Row-major d x d orthogonal matrix mapping this arm's input prompt to
    /// the next stage's prompt embedding.
    transform: Vec<f64>,
    pub output_token_law: OutputTokenLaw,
    pub pricing: TokenPricing,
    pub reward_family: RewardFamily,
}

impl SimulatedArm {
    /// Builds an arm from explicit parts; `hidden_vector` is normalized.
    pub fn new(
        id: ArmId,
        description: ArmDescription,
        mut hidden_vector: Vec<f64>,
        transform: Vec<f64>,
        output_token_law: OutputTokenLaw,
        pricing: TokenPricing,
        reward_family: RewardFamily,
    ) -> Result<Self, EnvError> {
        let d = description.embedding.dim();
        if hidden_vector.len() != d {
            return Err(EnvError::DimensionMismatch {
                expected: d,
                actual: hidden_vector.len(),
            });
        }
        if transform.len() != d * d {
            return Err(EnvError::DimensionMismatch {
                expected: d * d,
                actual: transform.len(),
            });
        }
        linalg::normalize(&mut hidden_vector);
        Ok(Self {
            id,
            description,
            hidden_vector,
            transform,
            output_token_law,
            pricing,
            reward_family,
        })
    }

    /// Noiseless mean reward of this arm on a prompt (raw family value; the
    /// clip to [0, 1] happens together with the noise).
    pub fn mean_reward(&self, prompt: &Embedding) -> Result<f64, EnvError> {
        let x = make_context(prompt, &self.description.embedding).map_err(|_| {
            EnvError::DimensionMismatch {
                expected: self.description.embedding.dim(),
                actual: prompt.dim(),
            }
        })?;
        let s = linalg::dot(x.values(), &self.hidden_vector);
        Ok(self.reward_family.mean(s))
    }

    /// The next stage's prompt embedding: `normalize(transform · prompt)`.
    pub fn next_prompt(&self, prompt: &Embedding) -> Result<Embedding, EnvError> {
        let d = self.description.embedding.dim();
        if prompt.dim() != d {
            return Err(EnvError::DimensionMismatch {
                expected: d,
                actual: prompt.dim(),
            });
        }
        let mut out = vec![0.0; d];
        linalg::mat_vec(&self.transform, prompt.values(), d, d, &mut out);
        linalg::normalize(&mut out);
        Ok(Embedding::new(out))
    }
}

/// What one pipeline stage produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    /// Base arm reward, clipped to [0, 1] after noise.
    pub reward: f64,
    pub next_prompt: Embedding,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub realized_cost: f64,
}

fn clip01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Row-major orthogonal matrix of a seeded signed coordinate permutation:
/// `(M p)_i = sign_i * p_{perm(i)}`.
fn signed_permutation(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = chacha(seed);
    let mut perm: Vec<usize> = (0..d).collect();
    // Fisher-Yates.
    for i in (1..d).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let mut m = vec![0.0; d * d];
    for (i, &src) in perm.iter().enumerate() {
        let sign: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        m[i * d + src] = sign;
    }
    m
}

fn identity_matrix(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Identity with `pairs` seeded disjoint coordinate pairs swapped.
fn pair_swap_matrix(d: usize, pairs: usize, seed: u64) -> Vec<f64> {
    let mut rng = chacha(seed);
    let mut indices: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    let mut m = identity_matrix(d);
    for pair in indices.chunks_exact(2).take(pairs.min(d / 2)) {
        let (a, b) = (pair[0], pair[1]);
        m[a * d + a] = 0.0;
        m[b * d + b] = 0.0;
        m[a * d + b] = 1.0;
        m[b * d + a] = 1.0;
    }
    m
}

/// The instantiated world: all arms plus the query stream.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: PipelineSpec,
    arms: Vec<Vec<SimulatedArm>>,
    bias_dir: Vec<f64>,
    /// Per-coordinate probability that a query coordinate is +1/√d.
    sign_probs: Vec<f64>,
}

impl Environment {
    pub fn new(spec: PipelineSpec) -> Result<Self, EnvError> {
        spec.validate()?;
        let d = spec.embedding_dim;

        let mut bias_dir: Vec<f64> = {
            let mut rng = chacha(mix(&[spec.env_seed, stream::BIAS_DIR]));
            (0..d).map(|_| rng.sample(StandardNormal)).collect()
        };
        while linalg::norm(&bias_dir) < 1e-12 {
            let mut rng = chacha(mix(&[spec.env_seed, stream::BIAS_DIR, 1]));
            bias_dir = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        }
        linalg::normalize(&mut bias_dir);

        let mut arms = Vec::with_capacity(spec.k());
        for (i, sub) in spec.subtasks.iter().enumerate() {
            let mut row = Vec::with_capacity(sub.arms.len());
            for (j, arm_spec) in sub.arms.iter().enumerate() {
                row.push(Self::build_arm(&spec, &bias_dir, i, j, arm_spec)?);
            }
            arms.push(row);
        }
        // Bias drifts the per-coordinate sign probabilities along bias_dir
        // while every coordinate keeps magnitude 1/√d.
        let drift = spec.query_bias * (d as f64).sqrt();
        let sign_probs: Vec<f64> = bias_dir
            .iter()
            .map(|u| 0.5 * (1.0 + (drift * u).clamp(-0.95, 0.95)))
            .collect();
        Ok(Self {
            spec,
            arms,
            bias_dir,
            sign_probs,
        })
    }

    fn build_arm(
        spec: &PipelineSpec,
        bias_dir: &[f64],
        i: usize,
        j: usize,
        arm_spec: &ArmSpec,
    ) -> Result<SimulatedArm, EnvError> {
        let d = spec.embedding_dim;
        let id = ArmId::new(i, j);
        let tag = arm_spec
            .tag
            .clone()
            .unwrap_or_else(|| format!("s{i}-a{j}"));
        // Description depends only on the tag, so the same model label used
        // at several stages shares one embedding.
        let desc_embedding = synth_embedding(&tag, d, mix(&[spec.env_seed, stream::DESCRIPTION]))
            .map_err(|e| EnvError::InvalidSpec {
                field: "tag".into(),
                reason: e.to_string(),
            })?;

        // Hidden vector: a per-(subtask, arm) direction amplified along the
        // description's large coordinates so contexts carry usable signal
        // (x = prompt ⊙ desc concentrates exactly there), optionally blended
        // toward the direction that maximizes the mean reward under the
        // drifted query stream (the description-weighted expected query).
        let de = desc_embedding.values();
        let w: Vec<f64> = {
            let mut rng = chacha(mix(&[spec.env_seed, stream::HIDDEN, i as u64, j as u64]));
            (0..d).map(|_| rng.sample(StandardNormal)).collect()
        };
        let mut base: Vec<f64> = de
            .iter()
            .zip(&w)
            .map(|(dv, wv)| dv * dv * wv)
            .collect();
        linalg::normalize(&mut base);
        let drift = spec.query_bias * (d as f64).sqrt();
        let mut ideal: Vec<f64> = if drift > 0.0 {
            de.iter()
                .zip(bias_dir)
                .map(|(dv, u)| dv * (drift * u).clamp(-0.95, 0.95))
                .collect()
        } else {
            de.iter().zip(bias_dir).map(|(dv, u)| dv * u).collect()
        };
        linalg::normalize(&mut ideal);
        let a = arm_spec.alignment;
        let hidden: Vec<f64> = base
            .iter()
            .zip(&ideal)
            .map(|(b, id_)| (1.0 - a) * b + a * id_)
            .collect();

        let transform_seed = mix(&[spec.env_seed, stream::TRANSFORM, i as u64, j as u64]);
        let transform = match arm_spec.transform {
            TransformKind::SignedPermutation => signed_permutation(d, transform_seed),
            TransformKind::Identity => identity_matrix(d),
            TransformKind::PairSwap { pairs } => pair_swap_matrix(d, pairs, transform_seed),
        };

        SimulatedArm::new(
            id,
            ArmDescription {
                arm: id,
                text_tag: tag,
                embedding: desc_embedding,
            },
            hidden,
            transform,
            arm_spec.output_tokens,
            arm_spec.pricing.resolve()?,
            arm_spec.reward_family,
        )
    }

    pub fn spec(&self) -> &PipelineSpec {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.spec.k()
    }

    pub fn arms(&self) -> &[Vec<SimulatedArm>] {
        &self.arms
    }

    pub fn arm(&self, id: ArmId) -> Result<&SimulatedArm, EnvError> {
        self.arms
            .get(id.subtask)
            .and_then(|row| row.get(id.arm))
            .ok_or(EnvError::UnknownArm(id))
    }

    /// Clones of every arm's description, indexed `[subtask][arm]`.
    pub fn descriptions(&self) -> Vec<Vec<ArmDescription>> {
        self.arms
            .iter()
            .map(|row| row.iter().map(|a| a.description.clone()).collect())
            .collect()
    }

    /// Output-length predictor matched to the arms' true token means.
    pub fn matched_predictor(&self) -> OutputLengthPredictor {
        OutputLengthPredictor::Table {
            tokens: self
                .arms
                .iter()
                .map(|row| row.iter().map(|a| a.output_token_law.mean).collect())
                .collect(),
        }
    }

    /// The round-t query embedding and its input token count; a pure
    /// function of `(query_stream_seed, t)`. Queries are unit-norm sign
    /// vectors: coordinate i is `±1/√d` with the sign drawn from the
    /// bias-drifted probability.
    pub fn next_query(&self, t: usize) -> (Embedding, u64) {
        let d = self.spec.embedding_dim;
        let mut rng = chacha(mix(&[self.spec.query_stream_seed, stream::QUERY, t as u64]));
        let mag = 1.0 / (d as f64).sqrt();
        let v: Vec<f64> = self
            .sign_probs
            .iter()
            .map(|p| if rng.gen::<f64>() < *p { mag } else { -mag })
            .collect();

        let (lo, hi) = self.spec.input_token_range;
        let mut trng = chacha(mix(&[
            self.spec.query_stream_seed,
            stream::QUERY_TOKENS,
            t as u64,
        ]));
        let tokens = trng.gen_range(lo..=hi);
        (Embedding::new(v), tokens)
    }

    /// Executes one stage: observed reward, next prompt, realized tokens and
    /// cost. The caller supplies the per-(round, stage) noise stream.
    pub fn stage_step(
        &self,
        arm: &SimulatedArm,
        prompt: &Embedding,
        input_tokens: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<StageOutcome, EnvError> {
        let mean = arm.mean_reward(prompt)?;
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * self.spec.noise_std;
        let reward = clip01(mean + noise);
        let next_prompt = arm.next_prompt(prompt)?;

        let law = arm.output_token_law;
        let delta = if law.jitter > 0 {
            rng.gen_range(-(law.jitter as i64)..=law.jitter as i64)
        } else {
            0
        };
        let output_tokens = (law.mean as i64 + delta).max(0) as u64;
        Ok(StageOutcome {
            reward,
            next_prompt,
            input_tokens,
            output_tokens,
            realized_cost: realized_cost(arm.pricing, input_tokens, output_tokens),
        })
    }

    /// Super-arm reward from the per-stage base rewards.
    pub fn super_reward(&self, base_rewards: &[f64]) -> Result<f64, EnvError> {
        if base_rewards.len() != self.k() {
            return Err(EnvError::RewardLengthMismatch {
                expected: self.k(),
                actual: base_rewards.len(),
            });
        }
        Ok(match &self.spec.combinator {
            Combinator::LastOnly => *base_rewards.last().unwrap(),
            Combinator::WeightedSum { weights } => linalg::dot(weights, base_rewards),
        })
    }

    /// Noiseless super-arm value of one concrete choice of arms.
    pub fn noiseless_super_value(
        &self,
        query: &Embedding,
        combo: &[usize],
    ) -> Result<f64, EnvError> {
        if combo.len() != self.k() {
            return Err(EnvError::RewardLengthMismatch {
                expected: self.k(),
                actual: combo.len(),
            });
        }
        let mut prompt = query.clone();
        let mut rewards = Vec::with_capacity(self.k());
        for (i, &j) in combo.iter().enumerate() {
            let arm = self.arm(ArmId::new(i, j))?;
            rewards.push(clip01(arm.mean_reward(&prompt)?));
            if i + 1 < self.k() {
                prompt = arm.next_prompt(&prompt)?;
            }
        }
        self.super_reward(&rewards)
    }

    /// Exhaustively enumerates every super arm with noise suppressed and
    /// returns the best choice and its value. Ties keep the first super arm
    /// in mixed-radix order.
    pub fn oracle_best(
        &self,
        query: &Embedding,
        enumeration_cap: usize,
    ) -> Result<(Vec<usize>, f64), EnvError> {
        let counts = self.spec.arms_per_subtask();
        let combos: usize = counts.iter().product();
        if combos > enumeration_cap {
            return Err(EnvError::EnumerationCapExceeded {
                combos,
                cap: enumeration_cap,
            });
        }
        let k = self.k();
        let mut combo = vec![0usize; k];
        let mut best_combo = combo.clone();
        let mut best_value = f64::NEG_INFINITY;
        loop {
            let value = self.noiseless_super_value(query, &combo)?;
            if value > best_value {
                best_value = value;
                best_combo = combo.clone();
            }
            // Mixed-radix increment, last subtask fastest.
            let mut idx = k;
            loop {
                if idx == 0 {
                    return Ok((best_combo, best_value));
                }
                idx -= 1;
                combo[idx] += 1;
                if combo[idx] < counts[idx] {
                    break;
                }
                combo[idx] = 0;
            }
        }
    }
}

/// The shipped default world: two subtasks of four linear-reward arms each
/// with staggered mean rewards (alignment against a drifted query stream),
/// varied token laws and price points. Three stage-1 arms pass prompts
/// through unchanged so stage-2 alignments carry to mean rewards; the
/// fourth permutes coordinates, which makes the optimal stage-2 arm depend
/// on the stage-1 choice.
pub fn default_spec() -> PipelineSpec {
    let arm = |pricing: &str, mean: u64, alignment: f64, kind: TransformKind, tag: &str| ArmSpec {
        reward_family: RewardFamily::Linear,
        pricing: PricingRef::Named(pricing.into()),
        output_tokens: OutputTokenLaw { mean, jitter: 60 },
        alignment,
        transform: kind,
        tag: Some(tag.into()),
    };
    let id = TransformKind::Identity;
    let swap = TransformKind::PairSwap { pairs: 3 };
    PipelineSpec {
        embedding_dim: 32,
        subtasks: vec![
            SubtaskSpec {
                arms: vec![
                    arm("gpt-3.5-turbo", 420, 0.50, id, "stage1-gpt-3.5-turbo"),
                    arm("llama-3.3", 360, 0.45, id, "stage1-llama-3.3"),
                    arm("med", 540, 0.30, id, "stage1-med"),
                    arm("tele", 300, 0.20, swap, "stage1-tele"),
                ],
            },
            SubtaskSpec {
                // The two leading arms are the same model under different
                // decoding configurations: one description, two token laws.
                arms: vec![
                    arm("gpt-3.5-turbo", 260, 0.88, id, "stage2-gpt-3.5-turbo"),
                    arm("gpt-3.5-turbo", 320, 0.86, id, "stage2-gpt-3.5-turbo"),
                    arm("med", 380, 0.10, id, "stage2-med"),
                    arm("med-iii", 440, 0.00, id, "stage2-med-iii"),
                ],
            },
        ],
        noise_std: 0.05,
        combinator: Combinator::LastOnly,
        horizon: 2000,
        query_stream_seed: 42,
        env_seed: 7,
        input_token_range: (500, 1500),
        query_bias: 1.2,
    }
}

/// The shipped cost-ordering world: the best-accuracy arm of the final
/// subtask is a finetuned deployment an order of magnitude pricier per
/// output token, so cost-aware selection must trade reward against spend.
/// Stage-1 transforms are identity so the drifted query stream reaches the
/// final stage intact and its arm alignments carry through to mean rewards.
pub fn cost_ordered_spec() -> PipelineSpec {
    let arm = |pricing: &str, mean: u64, alignment: f64, kind: TransformKind, tag: &str| ArmSpec {
        reward_family: RewardFamily::Linear,
        pricing: PricingRef::Named(pricing.into()),
        output_tokens: OutputTokenLaw { mean, jitter: 40 },
        alignment,
        transform: kind,
        tag: Some(tag.into()),
    };
    let id = TransformKind::Identity;
    let perm = TransformKind::SignedPermutation;
    PipelineSpec {
        embedding_dim: 16,
        subtasks: vec![
            SubtaskSpec {
                arms: vec![
                    arm("gpt-3.5-turbo", 500, 0.30, id, "sum-gpt-3.5-turbo"),
                    arm("llama-3.3", 400, 0.20, id, "sum-llama-3.3"),
                    arm("gpt-3.5-turbo", 300, 0.10, id, "sum-gpt-3.5-lite"),
                ],
            },
            SubtaskSpec {
                arms: vec![
                    arm("med", 700, 0.90, perm, "diag-med"),
                    arm("llama-3.3", 450, 0.45, perm, "diag-llama-3.3"),
                    arm("gpt-3.5-turbo", 350, 0.10, perm, "diag-gpt-3.5-turbo"),
                ],
            },
        ],
        noise_std: 0.05,
        combinator: Combinator::LastOnly,
        horizon: 1500,
        query_stream_seed: 42,
        env_seed: 11,
        input_token_range: (500, 1500),
        query_bias: 0.8,
    }
}

/// A noiseless single-subtask world with a structurally dominant arm: the
/// linear-family arm's reward never drops below 0.4 while the quadratic
/// arms never exceed a few hundredths, so the best fixed choice matches the
/// oracle on every round and the random policy's expected regret has a
/// closed form over the query stream.
pub fn known_means_spec() -> PipelineSpec {
    let arm = |family: RewardFamily, pricing: &str, mean: u64, tag: &str| ArmSpec {
        reward_family: family,
        pricing: PricingRef::Named(pricing.into()),
        output_tokens: OutputTokenLaw { mean, jitter: 0 },
        alignment: 0.3,
        transform: TransformKind::Identity,
        tag: Some(tag.into()),
    };
    PipelineSpec {
        embedding_dim: 8,
        subtasks: vec![SubtaskSpec {
            arms: vec![
                arm(RewardFamily::Linear, "llama-3.3", 400, "answer-llama-3.3"),
                arm(RewardFamily::Quadratic, "gpt-3.5-turbo", 300, "answer-gpt-3.5-turbo"),
                arm(RewardFamily::Quadratic, "med", 500, "answer-med"),
            ],
        }],
        noise_std: 0.0,
        combinator: Combinator::LastOnly,
        horizon: 5000,
        query_stream_seed: 42,
        env_seed: 13,
        input_token_range: (500, 1500),
        query_bias: 0.5,
    }
}
