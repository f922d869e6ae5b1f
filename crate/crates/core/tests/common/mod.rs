//! Shared test oracles, independent of the library's linear algebra.

#![allow(dead_code)] // each integration test binary uses its own subset

/// Hand-rolled LinUCB over explicit features with dense inversion.
pub struct LinUcbOracle {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    nu: f64,
}

impl LinUcbOracle {
    pub fn new(dim: usize, lambda: f64, nu: f64) -> Self {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = lambda;
        }
        Self {
            dim,
            a,
            b: vec![0.0; dim],
            nu,
        }
    }

    pub fn score(&self, phi: &[f64]) -> f64 {
        let inv = invert_dense(&self.a, self.dim);
        let theta: Vec<f64> = inv
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(&self.b).map(|(x, y)| x * y).sum())
            .collect();
        let est: f64 = theta.iter().zip(phi).map(|(x, y)| x * y).sum();
        let iphi: Vec<f64> = inv
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(phi).map(|(x, y)| x * y).sum())
            .collect();
        let quad: f64 = phi.iter().zip(&iphi).map(|(x, y)| x * y).sum();
        est + self.nu * quad.max(0.0).sqrt()
    }

    pub fn update(&mut self, phi: &[f64], reward: f64) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i * self.dim + j] += phi[i] * phi[j];
            }
        }
        for (bi, p) in self.b.iter_mut().zip(phi) {
            *bi += reward * p;
        }
    }
}

/// Gauss-Jordan inversion with partial pivoting on a dense row-major matrix.
pub fn invert_dense(m: &[f64], dim: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; dim * dim];
    for i in 0..dim {
        inv[i * dim + i] = 1.0;
    }
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r1, &r2| {
                a[r1 * dim + col]
                    .abs()
                    .partial_cmp(&a[r2 * dim + col].abs())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for j in 0..dim {
                a.swap(col * dim + j, pivot * dim + j);
                inv.swap(col * dim + j, pivot * dim + j);
            }
        }
        let diag = a[col * dim + col];
        for j in 0..dim {
            a[col * dim + j] /= diag;
            inv[col * dim + j] /= diag;
        }
        for row in 0..dim {
            if row != col {
                let factor = a[row * dim + col];
                if factor != 0.0 {
                    for j in 0..dim {
                        a[row * dim + j] -= factor * a[col * dim + j];
                        inv[row * dim + j] -= factor * inv[col * dim + j];
                    }
                }
            }
        }
    }
    inv
}
