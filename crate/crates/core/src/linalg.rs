//! Flat row-major matrix helpers for the hot paths.
//!
//! Matrices are `Vec<f64>` of length `rows * cols`, row-major. The loops are
//! written so LLVM vectorizes them; the confidence updates at p ≈ 1650 are
//! the dominant cost of a run.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Eight independent accumulators let the compiler keep several vector
    // lanes in flight; a single serial sum would forbid reassociation.
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let base = i * 8;
        for lane in 0..8 {
            acc[lane] += a[base + lane] * b[base + lane];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// y += alpha * x
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// out = M v, with M row-major rows x cols.
pub(crate) fn mat_vec(m: &[f64], v: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(v.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o = dot(row, v);
    }
}

/// vᵀ M v without allocating the intermediate M v.
pub(crate) fn quadratic_form(m: &[f64], v: &[f64], dim: usize) -> f64 {
    debug_assert_eq!(m.len(), dim * dim);
    debug_assert_eq!(v.len(), dim);
    m.chunks_exact(dim)
        .zip(v)
        .map(|(row, vi)| vi * dot(row, v))
        .sum()
}

/// M += alpha * u vᵀ
pub(crate) fn rank_one_add(m: &mut [f64], alpha: f64, u: &[f64], v: &[f64]) {
    debug_assert_eq!(m.len(), u.len() * v.len());
    for (row, ui) in m.chunks_exact_mut(v.len()).zip(u) {
        axpy(alpha * ui, v, row);
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Symmetric matrix in packed upper-triangular row-major storage: row `i`
/// holds entries `j = i..dim` contiguously. Symmetry is structural, and the
/// packed layout halves the memory traffic of the confidence-matrix hot
/// paths, which stream far beyond cache at p ~ 1650.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        };
        for i in 0..dim {
            let off = m.row_offset(i);
            m.data[off] = scale;
        }
        m
    }

    #[inline]
    fn row_offset(&self, i: usize) -> usize {
        // Rows 0..i have lengths dim, dim-1, ..., dim-i+1.
        i * self.dim - (i * i - i) / 2
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.data[self.row_offset(r) + (c - r)]
    }

    /// vᵀ M v in one pass over the packed triangle.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        let mut acc = 0.0;
        let mut off = 0;
        for i in 0..self.dim {
            let len = self.dim - i;
            let row = &self.data[off..off + len];
            let vi = v[i];
            acc += vi * vi * row[0] + 2.0 * vi * dot(&row[1..], &v[i + 1..]);
            off += len;
        }
        acc
    }

    /// out = M v in one pass over the packed triangle.
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut off = 0;
        for i in 0..self.dim {
            let len = self.dim - i;
            let row = &self.data[off..off + len];
            let vi = v[i];
            out[i] += row[0] * vi + dot(&row[1..], &v[i + 1..]);
            axpy(vi, &row[1..], &mut out[i + 1..]);
            off += len;
        }
    }

    /// M += alpha u uᵀ.
    pub fn rank_one_add(&mut self, alpha: f64, u: &[f64]) {
        debug_assert_eq!(u.len(), self.dim);
        let mut off = 0;
        for i in 0..self.dim {
            let len = self.dim - i;
            let row = &mut self.data[off..off + len];
            axpy(alpha * u[i], &u[i..], row);
            off += len;
        }
    }

    /// Dense row-major copy, for diagnostics and test oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = self.entry(i, j);
            }
        }
        m
    }
}

/// Scales v to unit Euclidean length; leaves an exact zero vector untouched.
pub(crate) fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}
