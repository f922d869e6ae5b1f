//! Embeddings and per-arm context construction.
//!
//! An arm's context is the elementwise product of the current prompt
//! embedding and the arm's description embedding; it is the input to the
//! arm's reward network. Description embeddings are synthesized
//! deterministically from text tags in place of a sentence-transformer.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::rng::{chacha, hash_tag, mix};

#[derive(Debug, Error, PartialEq)]
pub enum ContextError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("empty tag")]
    EmptyTag,
}

/// Addresses a (subtask, arm) pair; the unit owning a network and a
/// confidence matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmId {
    pub subtask: usize,
    pub arm: usize,
}

impl ArmId {
    pub fn new(subtask: usize, arm: usize) -> Self {
        Self { subtask, arm }
    }
}

impl std::fmt::Display for ArmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.subtask, self.arm)
    }
}

/// A real vector of fixed dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// The elementwise product of a prompt embedding and an arm description
/// embedding; input to the reward networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// One candidate model for one subtask, with its embedded description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmDescription {
    pub arm: ArmId,
    pub text_tag: String,
    pub embedding: Embedding,
}

/// Deterministic unit-norm embedding for a text tag.
///
/// Hashes the tag into a stream seed, draws `d` i.i.d. Gaussians and
/// normalizes to unit Euclidean length.
pub fn synth_embedding(tag: &str, d: usize, seed: u64) -> Result<Embedding, ContextError> {
    if tag.is_empty() {
        return Err(ContextError::EmptyTag);
    }
    if d == 0 {
        return Err(ContextError::ZeroDimension);
    }
    let mut rng = chacha(mix(&[hash_tag(tag), seed]));
    let mut values: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    // A zero draw is astronomically unlikely but would break normalization.
    while linalg::norm(&values) < 1e-12 {
        values = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    }
    linalg::normalize(&mut values);
    Ok(Embedding(values))
}

/// Componentwise product of the prompt and description embeddings.
pub fn make_context(prompt: &Embedding, desc: &Embedding) -> Result<ContextVector, ContextError> {
    if prompt.dim() != desc.dim() {
        return Err(ContextError::DimensionMismatch {
            left: prompt.dim(),
            right: desc.dim(),
        });
    }
    Ok(ContextVector(
        prompt
            .values()
            .iter()
            .zip(desc.values())
            .map(|(p, d)| p * d)
            .collect(),
    ))
}
