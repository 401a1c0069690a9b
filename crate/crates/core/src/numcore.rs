//! Dense matrices, the seeded generator and the Adam update rule.
//!
//! Everything here is deterministic: the same seed and the same call
//! sequence give bit-identical results run after run.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{param, shape, Error, Result};

/// Row-major dense matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(shape("ragged rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn gather_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy)]
enum Side {
    Plain,
    Transposed,
}

/// Row/column strides of `m` as seen through `side`.
fn view(m: &Matrix, side: Side) -> (usize, usize, isize, isize) {
    match side {
        Side::Plain => (m.rows, m.cols, m.cols as isize, 1),
        Side::Transposed => (m.cols, m.rows, 1, m.cols as isize),
    }
}

fn gemm(a: &Matrix, sa: Side, b: &Matrix, sb: Side) -> Result<Matrix> {
    let (m, k, rsa, csa) = view(a, sa);
    let (kb, n, rsb, csb) = view(b, sb);
    if k != kb {
        return Err(shape(format!("cannot multiply {m}x{k} by {kb}x{n}")));
    }
    let mut out = Matrix::zeros(m, n);
    if m > 0 && n > 0 && k > 0 {
        // SAFETY: strides describe in-bounds views of the three buffers,
        // which do not alias.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.data.as_ptr(),
                rsa,
                csa,
                b.data.as_ptr(),
                rsb,
                csb,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
    if !out.is_finite() {
        return Err(Error::Numeric("matrix product overflowed".into()));
    }
    Ok(out)
}

/// `a · b`.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    gemm(a, Side::Plain, b, Side::Plain)
}

/// `aᵀ · b`.
pub fn mat_mul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    gemm(a, Side::Transposed, b, Side::Plain)
}

/// `a · bᵀ`.
pub fn mat_mul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    gemm(a, Side::Plain, b, Side::Transposed)
}

/// Seeded pseudo-random generator (ChaCha8 stream).
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `n` draws from Normal(mean, std).
    pub fn normal(&mut self, mean: f64, std: f64, n: usize) -> Result<Vec<f64>> {
        if !(std.is_finite() && std >= 0.0) || !mean.is_finite() {
            return Err(param(format!(
                "normal needs finite mean and std >= 0, got std {std}"
            )));
        }
        let dist = Normal::new(mean, std).map_err(|e| param(e.to_string()))?;
        Ok((0..n).map(|_| dist.sample(&mut self.inner)).collect())
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        xs.shuffle(&mut self.inner);
    }
}

/// Bias-corrected Adam moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS_HAT: f64 = 1e-8;

    pub fn new(len: usize) -> Self {
        Self::with_hyper(len, Self::BETA1, Self::BETA2, Self::EPS_HAT)
    }

    pub fn with_hyper(len: usize, beta1: f64, beta2: f64, eps_hat: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1,
            beta2,
            eps_hat,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One descent step `params ← params − lr · m̂ / (√v̂ + eps_hat)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(shape(format!(
                "adam state {} / params {} / grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if lr.is_nan() || lr <= 0.0 {
            return Err(param(format!("learning rate must be positive, got {lr}")));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps_hat);
        }
        Ok(())
    }
}
