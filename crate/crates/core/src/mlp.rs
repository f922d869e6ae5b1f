//! Minimal fully connected ReLU network with scalar output.
//!
//! The network is `f(x; θ) = s · W_L σ(W_{L-1} … σ(W_0 x))` with no bias
//! terms, ReLU activations, and an output scale `s` defaulting to the square
//! root of the hidden width. Parameters live in one flat vector `θ`: the
//! row-major entries of `W_0`, then `W_1`, …, then `W_L`, which is also the
//! layout of the gradient returned by [`gradient`]. Training is plain
//! full-batch gradient descent on mean squared error, warm-started from the
//! incoming parameters; everything is deterministic given seeds and inputs.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::ContextVector;
use crate::linalg::dot;
use crate::rng::chacha;

#[derive(Debug, Error, PartialEq)]
pub enum MlpError {
    #[error("{field} must be at least 1")]
    ZeroDimension { field: &'static str },
    #[error("output_scale must be positive and finite, got {0}")]
    BadOutputScale(f64),
    #[error("input dimension mismatch: network expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("theta has {actual} entries, architecture needs {expected}")]
    ThetaLength { expected: usize, actual: usize },
    #[error("theta contains a non-finite entry at index {0}")]
    NonFiniteTheta(usize),
    #[error("training history is empty")]
    EmptyHistory,
    #[error("learning rate must be finite and non-negative, got {0}")]
    BadLearningRate(f64),
    #[error("non-finite loss {loss} at gradient step {step}")]
    NonFiniteLoss { loss: f64, step: usize },
}

/// Shape of the network: `hidden_layers + 1` weight matrices, scalar output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkArch {
    pub input_dim: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub output_scale: f64,
}

impl NetworkArch {
    /// Architecture with the default output scale `√hidden_width`.
    pub fn new(
        input_dim: usize,
        hidden_width: usize,
        hidden_layers: usize,
    ) -> Result<Self, MlpError> {
        Self::with_output_scale(
            input_dim,
            hidden_width,
            hidden_layers,
            (hidden_width as f64).sqrt(),
        )
    }

    pub fn with_output_scale(
        input_dim: usize,
        hidden_width: usize,
        hidden_layers: usize,
        output_scale: f64,
    ) -> Result<Self, MlpError> {
        if input_dim == 0 {
            return Err(MlpError::ZeroDimension { field: "input_dim" });
        }
        if hidden_width == 0 {
            return Err(MlpError::ZeroDimension {
                field: "hidden_width",
            });
        }
        if hidden_layers == 0 {
            return Err(MlpError::ZeroDimension {
                field: "hidden_layers",
            });
        }
        if !(output_scale.is_finite() && output_scale > 0.0) {
            return Err(MlpError::BadOutputScale(output_scale));
        }
        Ok(Self {
            input_dim,
            hidden_width,
            hidden_layers,
            output_scale,
        })
    }

    /// (rows, cols) of each weight matrix, input side first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let n = self.hidden_width;
        let mut shapes = vec![(n, self.input_dim)];
        for _ in 1..self.hidden_layers {
            shapes.push((n, n));
        }
        shapes.push((1, n));
        shapes
    }

    /// Total weight count p.
    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(r, c)| r * c).sum()
    }
}

/// The flat weight vector of one arm's network plus its architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    arch: NetworkArch,
    theta: Vec<f64>,
}

impl NetworkParams {
    pub fn from_theta(arch: NetworkArch, theta: Vec<f64>) -> Result<Self, MlpError> {
        let expected = arch.param_count();
        if theta.len() != expected {
            return Err(MlpError::ThetaLength {
                expected,
                actual: theta.len(),
            });
        }
        if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
            return Err(MlpError::NonFiniteTheta(i));
        }
        Ok(Self { arch, theta })
    }

    pub fn zeros(arch: NetworkArch) -> Self {
        let theta = vec![0.0; arch.param_count()];
        Self { arch, theta }
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }
}

/// Ordered (context, reward) pairs an arm has observed; its training set.
#[derive(Debug, Clone, Default)]
pub struct TrainingHistory {
    samples: Vec<(ContextVector, f64)>,
}

impl TrainingHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, context: ContextVector, reward: f64) {
        self.samples.push((context, reward));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(ContextVector, f64)] {
        &self.samples
    }
}

/// Seeded He initialization (per-weight N(0, 2 / fan_in)) with the output
/// layer antisymmetrized so that `f(x; θ0) = 0` for every input.
///
/// The top hidden layer's rows come in identical pairs and the output row
/// carries `[w, -w]`, so the paired activations cancel exactly. Without
/// this, the `√width`-scaled network starts as a large random function that
/// gradient descent must spend the whole horizon unlearning before the
/// reward signal, which is an order of magnitude smaller, becomes visible.
pub fn init_network(arch: NetworkArch, seed: u64) -> Result<NetworkParams, MlpError> {
    // Arch construction already rejects zero dimensions; validate the scale
    // again in case the struct was built literally.
    NetworkArch::with_output_scale(
        arch.input_dim,
        arch.hidden_width,
        arch.hidden_layers,
        arch.output_scale,
    )?;
    let mut rng = chacha(seed);
    let mut theta = Vec::with_capacity(arch.param_count());
    let top_hidden = arch.hidden_layers - 1;
    for (index, (rows, cols)) in arch.layer_shapes().into_iter().enumerate() {
        let std = (2.0 / cols as f64).sqrt();
        let mut gauss = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| std * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        if index < top_hidden {
            theta.extend(gauss(rows * cols));
        } else if index == top_hidden {
            // Duplicate rows pairwise; an odd last unit stays unpaired and
            // gets a zero output weight below.
            let half = gauss((rows / 2) * cols);
            theta.extend_from_slice(&half);
            theta.extend_from_slice(&half);
            if rows % 2 == 1 {
                theta.extend(gauss(cols));
            }
        } else {
            let half = gauss(cols / 2);
            theta.extend_from_slice(&half);
            theta.extend(half.iter().map(|w| -w));
            if cols % 2 == 1 {
                theta.push(0.0);
            }
        }
    }
    Ok(NetworkParams { arch, theta })
}

struct ForwardPass {
    /// Post-activation vector of each hidden layer.
    activations: Vec<Vec<f64>>,
    output: f64,
}

fn run_forward(params: &NetworkParams, x: &[f64]) -> ForwardPass {
    let arch = &params.arch;
    let n = arch.hidden_width;
    let mut activations = Vec::with_capacity(arch.hidden_layers);
    let mut offset = 0;

    let mut prev: &[f64] = x;
    for (index, (rows, cols)) in arch.layer_shapes().into_iter().enumerate() {
        let w = &params.theta[offset..offset + rows * cols];
        offset += rows * cols;
        if index == arch.hidden_layers {
            // Output layer: scalar, no activation.
            let out = arch.output_scale * dot(w, prev);
            return ForwardPass {
                activations,
                output: out,
            };
        }
        let mut h = vec![0.0; n];
        for (hi, row) in h.iter_mut().zip(w.chunks_exact(cols)) {
            let z = dot(row, prev);
            *hi = if z > 0.0 { z } else { 0.0 };
        }
        activations.push(h);
        prev = activations.last().unwrap();
    }
    unreachable!("layer_shapes always ends with the output row");
}

fn check_input(params: &NetworkParams, x: &ContextVector) -> Result<(), MlpError> {
    if x.dim() != params.arch.input_dim {
        return Err(MlpError::DimensionMismatch {
            expected: params.arch.input_dim,
            actual: x.dim(),
        });
    }
    Ok(())
}

/// Scalar network output; pure.
pub fn forward(params: &NetworkParams, x: &ContextVector) -> Result<f64, MlpError> {
    check_input(params, x)?;
    Ok(run_forward(params, x.values()).output)
}

/// Activations of the last hidden layer, the feature map used by the
/// linear-head baseline.
pub fn hidden_features(params: &NetworkParams, x: &ContextVector) -> Result<Vec<f64>, MlpError> {
    check_input(params, x)?;
    let pass = run_forward(params, x.values());
    Ok(pass.activations.into_iter().next_back().unwrap())
}

/// Adds `coeff * ∇_θ f(x; θ)` into `grad` given the sample's forward pass.
///
/// ReLU's subgradient at exactly zero pre-activation is taken as zero, which
/// the strict `> 0` mask encodes (a zero post-activation kills the path).
fn backprop(
    params: &NetworkParams,
    x: &[f64],
    pass: &ForwardPass,
    coeff: f64,
    grad: &mut [f64],
) {
    let arch = &params.arch;
    let shapes = arch.layer_shapes();

    let mut offsets = Vec::with_capacity(shapes.len());
    let mut off = 0;
    for (r, c) in &shapes {
        offsets.push(off);
        off += r * c;
    }

    let last = arch.hidden_layers; // index of the output layer
    let n = arch.hidden_width;

    // Output layer: d f / d W_L = s * a_{L-1}.
    let a_top = &pass.activations[last - 1];
    let w_out = &params.theta[offsets[last]..offsets[last] + n];
    {
        let g = &mut grad[offsets[last]..offsets[last] + n];
        for (gi, ai) in g.iter_mut().zip(a_top) {
            *gi += coeff * arch.output_scale * ai;
        }
    }

    // delta over the top hidden layer.
    let mut delta: Vec<f64> = w_out
        .iter()
        .zip(a_top)
        .map(|(w, a)| {
            if *a > 0.0 {
                coeff * arch.output_scale * w
            } else {
                0.0
            }
        })
        .collect();

    // Walk hidden layers from the top down.
    for l in (0..last).rev() {
        let (rows, cols) = shapes[l];
        let below: &[f64] = if l == 0 {
            x
        } else {
            &pass.activations[l - 1]
        };
        {
            let g = &mut grad[offsets[l]..offsets[l] + rows * cols];
            for (grow, di) in g.chunks_exact_mut(cols).zip(&delta) {
                if *di != 0.0 {
                    for (ge, be) in grow.iter_mut().zip(below) {
                        *ge += di * be;
                    }
                }
            }
        }
        if l > 0 {
            let w = &params.theta[offsets[l]..offsets[l] + rows * cols];
            let mut next_delta = vec![0.0; cols];
            for (wrow, di) in w.chunks_exact(cols).zip(&delta) {
                if *di != 0.0 {
                    for (nd, we) in next_delta.iter_mut().zip(wrow) {
                        *nd += di * we;
                    }
                }
            }
            for (nd, a) in next_delta.iter_mut().zip(&pass.activations[l - 1]) {
                if *a <= 0.0 {
                    *nd = 0.0;
                }
            }
            delta = next_delta;
        }
    }
}

/// Exact backpropagation gradient of the scalar output with respect to every
/// weight, flattened in theta order.
pub fn gradient(params: &NetworkParams, x: &ContextVector) -> Result<Vec<f64>, MlpError> {
    check_input(params, x)?;
    let mut grad = vec![0.0; params.theta.len()];
    let pass = run_forward(params, x.values());
    backprop(params, x.values(), &pass, 1.0, &mut grad);
    Ok(grad)
}

/// `steps` full-batch gradient-descent steps on mean squared error,
/// warm-starting from `params`. `eta = 0` or `steps = 0` returns the
/// parameters unchanged.
pub fn train(
    params: &NetworkParams,
    history: &TrainingHistory,
    eta: f64,
    steps: usize,
) -> Result<NetworkParams, MlpError> {
    train_impl(params, history, eta, steps, None)
}

/// [`train`] with an extra proximal term `weight · ‖θ − θ_anchor‖²` in the
/// loss, pulling the weights toward an anchor. Off by default everywhere.
pub fn train_proximal(
    params: &NetworkParams,
    history: &TrainingHistory,
    eta: f64,
    steps: usize,
    weight: f64,
    anchor: &NetworkParams,
) -> Result<NetworkParams, MlpError> {
    if anchor.theta.len() != params.theta.len() {
        return Err(MlpError::ThetaLength {
            expected: params.theta.len(),
            actual: anchor.theta.len(),
        });
    }
    train_impl(params, history, eta, steps, Some((weight, anchor)))
}

fn train_impl(
    params: &NetworkParams,
    history: &TrainingHistory,
    eta: f64,
    steps: usize,
    proximal: Option<(f64, &NetworkParams)>,
) -> Result<NetworkParams, MlpError> {
    if history.is_empty() {
        return Err(MlpError::EmptyHistory);
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(MlpError::BadLearningRate(eta));
    }
    for (x, _) in history.samples() {
        check_input(params, x)?;
    }

    let mut current = params.clone();
    if eta == 0.0 || steps == 0 {
        return Ok(current);
    }

    let count = history.len() as f64;
    let mut grad = vec![0.0; current.theta.len()];
    for step in 0..steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (x, r) in history.samples() {
            // The residual scales the per-sample gradient; one backprop per
            // sample accumulates straight into the batch gradient.
            let pass = run_forward(&current, x.values());
            let residual = pass.output - r;
            loss += residual * residual;
            backprop(&current, x.values(), &pass, 2.0 * residual / count, &mut grad);
        }
        loss /= count;
        if let Some((weight, anchor)) = proximal {
            for ((g, t), a) in grad
                .iter_mut()
                .zip(&current.theta)
                .zip(&anchor.theta)
            {
                *g += 2.0 * weight * (t - a);
                loss += weight * (t - a) * (t - a);
            }
        }
        if !loss.is_finite() {
            return Err(MlpError::NonFiniteLoss { loss, step });
        }
        for (t, g) in current.theta.iter_mut().zip(&grad) {
            *t -= eta * g;
        }
    }
    Ok(current)
}

/// Mean squared error of the network over a history; used by training
/// diagnostics and tests.
pub fn mse(params: &NetworkParams, history: &TrainingHistory) -> Result<f64, MlpError> {
    if history.is_empty() {
        return Err(MlpError::EmptyHistory);
    }
    let mut loss = 0.0;
    for (x, r) in history.samples() {
        let e = forward(params, x)? - r;
        loss += e * e;
    }
    Ok(loss / history.len() as f64)
}
