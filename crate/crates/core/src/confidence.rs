//! Per-arm confidence matrix `Z` and the exploration bonus `‖g/√n‖_{Z⁻¹}`.
//!
//! `Z` starts at `λI` and accumulates gradient outer products `g gᵀ / n`.
//! In exact mode the inverse is maintained by the Sherman-Morrison identity;
//! both matrices live in packed symmetric storage, so symmetry is structural
//! rather than damped by periodic re-symmetrization. Diagonal mode keeps
//! only the diagonal for large parameter counts. `Z` grows in the
//! positive-semidefinite order, so the bonus for any fixed vector never
//! increases across updates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, SymMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum ConfidenceError {
    #[error("lambda must be positive, got {0}")]
    BadLambda(f64),
    #[error("dim must be at least 1")]
    ZeroDimension,
    #[error("vector has {actual} entries, state has dimension {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("update vector contains a non-finite entry at index {0}")]
    NonFiniteVector(usize),
    #[error("width divisor n must be at least 1")]
    ZeroWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    Exact,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
enum Store {
    Exact { z: SymMatrix, z_inv: SymMatrix },
    Diagonal { z: Vec<f64>, z_inv: Vec<f64> },
}

/// The matrix `Z` (and maintained inverse) for one arm's exploration bonus.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    dim: usize,
    lambda: f64,
    store: Store,
    updates: usize,
}

impl ConfidenceState {
    /// `Z = λI`, `Z⁻¹ = (1/λ)I`.
    pub fn init(dim: usize, lambda: f64, mode: MatrixMode) -> Result<Self, ConfidenceError> {
        if dim == 0 {
            return Err(ConfidenceError::ZeroDimension);
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ConfidenceError::BadLambda(lambda));
        }
        let store = match mode {
            MatrixMode::Exact => Store::Exact {
                z: SymMatrix::scaled_identity(dim, lambda),
                z_inv: SymMatrix::scaled_identity(dim, 1.0 / lambda),
            },
            MatrixMode::Diagonal => Store::Diagonal {
                z: vec![lambda; dim],
                z_inv: vec![1.0 / lambda; dim],
            },
        };
        Ok(Self {
            dim,
            lambda,
            store,
            updates: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> MatrixMode {
        match self.store {
            Store::Exact { .. } => MatrixMode::Exact,
            Store::Diagonal { .. } => MatrixMode::Diagonal,
        }
    }

    pub fn update_count(&self) -> usize {
        self.updates
    }

    pub fn z_entry(&self, row: usize, col: usize) -> f64 {
        match &self.store {
            Store::Exact { z, .. } => z.entry(row, col),
            Store::Diagonal { z, .. } => {
                if row == col {
                    z[row]
                } else {
                    0.0
                }
            }
        }
    }

    pub fn z_inv_entry(&self, row: usize, col: usize) -> f64 {
        match &self.store {
            Store::Exact { z_inv, .. } => z_inv.entry(row, col),
            Store::Diagonal { z_inv, .. } => {
                if row == col {
                    z_inv[row]
                } else {
                    0.0
                }
            }
        }
    }

    /// Dense row-major copies for diagnostics and test oracles.
    pub fn z_dense(&self) -> Vec<f64> {
        self.dense(|s| match &s.store {
            Store::Exact { z, .. } => z.to_dense(),
            Store::Diagonal { z, .. } => diag_to_dense(z),
        })
    }

    pub fn z_inv_dense(&self) -> Vec<f64> {
        self.dense(|s| match &s.store {
            Store::Exact { z_inv, .. } => z_inv.to_dense(),
            Store::Diagonal { z_inv, .. } => diag_to_dense(z_inv),
        })
    }

    fn dense(&self, f: impl Fn(&Self) -> Vec<f64>) -> Vec<f64> {
        f(self)
    }

    fn check_vector(&self, g: &[f64]) -> Result<(), ConfidenceError> {
        if g.len() != self.dim {
            return Err(ConfidenceError::DimensionMismatch {
                expected: self.dim,
                actual: g.len(),
            });
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(ConfidenceError::NonFiniteVector(i));
        }
        Ok(())
    }

    /// `Z ← Z + g gᵀ / n`, with the inverse tracked by Sherman-Morrison in
    /// exact mode and entrywise in diagonal mode.
    pub fn rank_one_update(&mut self, g: &[f64], n: usize) -> Result<(), ConfidenceError> {
        self.check_vector(g)?;
        if n == 0 {
            return Err(ConfidenceError::ZeroWidth);
        }
        let n = n as f64;
        match &mut self.store {
            Store::Exact { z, z_inv } => {
                z.rank_one_add(1.0 / n, g);
                // z_inv -= (z_inv g)(z_inv g)ᵀ / (n + gᵀ z_inv g)
                let mut u = vec![0.0; self.dim];
                z_inv.mul_vec(g, &mut u);
                let denom = n + dot(g, &u);
                z_inv.rank_one_add(-1.0 / denom, &u);
            }
            Store::Diagonal { z, z_inv } => {
                for ((zk, ik), gk) in z.iter_mut().zip(z_inv.iter_mut()).zip(g) {
                    *zk += gk * gk / n;
                    *ik = 1.0 / *zk;
                }
            }
        }
        self.updates += 1;
        Ok(())
    }

    /// `Z⁻¹ v` using the maintained inverse.
    pub fn inv_mat_vec(&self, v: &[f64]) -> Result<Vec<f64>, ConfidenceError> {
        self.check_vector(v)?;
        match &self.store {
            Store::Exact { z_inv, .. } => {
                let mut out = vec![0.0; self.dim];
                z_inv.mul_vec(v, &mut out);
                Ok(out)
            }
            Store::Diagonal { z_inv, .. } => {
                Ok(v.iter().zip(z_inv).map(|(vi, zi)| vi * zi).collect())
            }
        }
    }

    /// `√(gᵀ Z⁻¹ g / n)`; zero exactly when `g` is zero.
    pub fn exploration_bonus(&self, g: &[f64], n: usize) -> Result<f64, ConfidenceError> {
        self.check_vector(g)?;
        if n == 0 {
            return Err(ConfidenceError::ZeroWidth);
        }
        let q = match &self.store {
            Store::Exact { z_inv, .. } => z_inv.quadratic_form(g),
            Store::Diagonal { z_inv, .. } => g
                .iter()
                .zip(z_inv)
                .map(|(gk, zk)| gk * gk * zk)
                .sum(),
        };
        // The quadratic form is non-negative up to rounding; clamp the dust.
        Ok((q.max(0.0) / n as f64).sqrt())
    }

    /// `‖Z Z⁻¹ − I‖_max`, re-checkable on demand. O(dim³) in exact mode; a
    /// diagnostic, not a hot-path call.
    pub fn inverse_drift(&self) -> f64 {
        match &self.store {
            Store::Diagonal { z, z_inv } => z
                .iter()
                .zip(z_inv)
                .map(|(zk, ik)| (zk * ik - 1.0).abs())
                .fold(0.0, f64::max),
            Store::Exact { .. } => {
                let d = self.dim;
                let z = self.z_dense();
                let z_inv = self.z_inv_dense();
                let mut worst = 0.0f64;
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = 0.0;
                        for k in 0..d {
                            acc += z[i * d + k] * z_inv[k * d + j];
                        }
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((acc - target).abs());
                    }
                }
                worst
            }
        }
    }
}

fn diag_to_dense(diag: &[f64]) -> Vec<f64> {
    let d = diag.len();
    let mut m = vec![0.0; d * d];
    for (i, v) in diag.iter().enumerate() {
        m[i * d + i] = *v;
    }
    m
}
