//! Two-hidden-layer ReLU network with a 2-unit softmax head.
//!
//! `forward` returns the class-1 probability of every row together with the
//! activations needed by `backward`, which pulls an arbitrary upstream
//! gradient `dL/dp` back to every weight. Losses never see logits, so any
//! batch-level objective plugs in through its gradient with respect to `p`.

use serde::{Deserialize, Serialize};

use crate::data::Encoder;
use crate::error::{param, shape, Error, Result};
use crate::numcore::{mat_mul, mat_mul_nt, mat_mul_tn, Matrix, Rng};

pub const P_MIN: f64 = 1e-7;
pub const P_MAX: f64 = 1.0 - 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub d: usize,
    pub h1: usize,
    pub h2: usize,
}

impl Dims {
    /// Total number of weights and biases.
    pub fn param_count(&self) -> usize {
        self.d * self.h1 + self.h1 + self.h1 * self.h2 + self.h2 + self.h2 * 2 + 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

impl MlpParams {
    /// He-normal weights, zero biases.
    pub fn init(dims: Dims, rng: &mut Rng) -> Result<Self> {
        if dims.d == 0 || dims.h1 == 0 || dims.h2 == 0 {
            return Err(param(format!("layer sizes must be >= 1, got {dims:?}")));
        }
        let he = |fan_in: usize, fan_out: usize, rng: &mut Rng| -> Result<Matrix> {
            let std = (2.0 / fan_in as f64).sqrt();
            Matrix::from_vec(fan_in, fan_out, rng.normal(0.0, std, fan_in * fan_out)?)
        };
        Ok(Self {
            w1: he(dims.d, dims.h1, rng)?,
            b1: vec![0.0; dims.h1],
            w2: he(dims.h1, dims.h2, rng)?,
            b2: vec![0.0; dims.h2],
            w_out: he(dims.h2, 2, rng)?,
            b_out: vec![0.0; 2],
        })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            w1: Matrix::zeros(dims.d, dims.h1),
            b1: vec![0.0; dims.h1],
            w2: Matrix::zeros(dims.h1, dims.h2),
            b2: vec![0.0; dims.h2],
            w_out: Matrix::zeros(dims.h2, 2),
            b_out: vec![0.0; 2],
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            d: self.w1.rows(),
            h1: self.w1.cols(),
            h2: self.w2.cols(),
        }
    }

    /// Parameters in the fixed order w1, b1, w2, b2, w_out, b_out.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dims().param_count());
        v.extend_from_slice(self.w1.as_slice());
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(self.w2.as_slice());
        v.extend_from_slice(&self.b2);
        v.extend_from_slice(self.w_out.as_slice());
        v.extend_from_slice(&self.b_out);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.dims().param_count() {
            return Err(shape(format!(
                "expected {} parameters, got {}",
                self.dims().param_count(),
                flat.len()
            )));
        }
        let mut rest = flat;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        take(self.w1.as_mut_slice());
        take(&mut self.b1);
        take(self.w2.as_mut_slice());
        take(&mut self.b2);
        take(self.w_out.as_mut_slice());
        take(&mut self.b_out);
        Ok(())
    }

    pub fn from_flat(dims: Dims, flat: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(dims);
        p.set_flat(flat)?;
        Ok(p)
    }

    /// ℓ1 norm of each weight matrix (biases excluded), input layer first.
    pub fn weight_l1_per_layer(&self) -> [f64; 3] {
        let l1 = |m: &Matrix| m.as_slice().iter().map(|v| v.abs()).sum::<f64>();
        [l1(&self.w1), l1(&self.w2), l1(&self.w_out)]
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// Activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub z1: Matrix,
    pub a1: Matrix,
    pub z2: Matrix,
    pub a2: Matrix,
    pub logits: Matrix,
    /// Softmax class-1 probability before clamping.
    pub p_raw: Vec<f64>,
    /// Class-1 probability clamped to `[P_MIN, P_MAX]`.
    pub p: Vec<f64>,
}

/// Numerically stable two-way softmax.
pub fn softmax2(z0: f64, z1: f64) -> [f64; 2] {
    let m = z0.max(z1);
    let e0 = (z0 - m).exp();
    let e1 = (z1 - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

fn add_bias_inplace(m: &mut Matrix, bias: &[f64]) {
    let cols = m.cols();
    for row in m.as_mut_slice().chunks_mut(cols) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn relu(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for v in out.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

fn col_sums(m: &Matrix) -> Vec<f64> {
    let mut s = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (acc, v) in s.iter_mut().zip(m.row(r)) {
            *acc += v;
        }
    }
    s
}

/// Zeroes `grad` wherever the pre-activation was not positive.
fn relu_backward_inplace(grad: &mut Matrix, pre: &Matrix) {
    for (g, &z) in grad.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn forward(params: &MlpParams, x: &Matrix) -> Result<ForwardTrace> {
    let dims = params.dims();
    if x.cols() != dims.d {
        return Err(shape(format!(
            "input has {} features, model expects {}",
            x.cols(),
            dims.d
        )));
    }
    let mut z1 = mat_mul(x, &params.w1)?;
    add_bias_inplace(&mut z1, &params.b1);
    let a1 = relu(&z1);
    let mut z2 = mat_mul(&a1, &params.w2)?;
    add_bias_inplace(&mut z2, &params.b2);
    let a2 = relu(&z2);
    let mut logits = mat_mul(&a2, &params.w_out)?;
    add_bias_inplace(&mut logits, &params.b_out);

    let p_raw: Vec<f64> = (0..logits.rows())
        .map(|i| softmax2(logits.get(i, 0), logits.get(i, 1))[1])
        .collect();
    if p_raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite probability".into()));
    }
    let p = p_raw.iter().map(|v| v.clamp(P_MIN, P_MAX)).collect();
    Ok(ForwardTrace {
        input: x.clone(),
        z1,
        a1,
        z2,
        a2,
        logits,
        p_raw,
        p,
    })
}

/// Gradient of a scalar loss with respect to every parameter, given the
/// loss's gradient with respect to each output probability.
///
/// The probability clamp is treated as the identity here, so saturated
/// outputs still receive the softmax gradient.
pub fn backward(params: &MlpParams, trace: &ForwardTrace, dl_dp: &[f64]) -> Result<MlpParams> {
    let s = trace.p_raw.len();
    if dl_dp.len() != s {
        return Err(shape(format!(
            "upstream gradient has {} entries for a batch of {s}",
            dl_dp.len()
        )));
    }
    // p = softmax(z)[1]: dp/dz1 = p(1-p), dp/dz0 = -p(1-p).
    let mut d_logits = Matrix::zeros(s, 2);
    {
        let buf = d_logits.as_mut_slice();
        for i in 0..s {
            let p = trace.p_raw[i];
            let g = dl_dp[i] * p * (1.0 - p);
            buf[2 * i] = -g;
            buf[2 * i + 1] = g;
        }
    }
    let w_out = mat_mul_tn(&trace.a2, &d_logits)?;
    let b_out = col_sums(&d_logits);

    let mut d_z2 = mat_mul_nt(&d_logits, &params.w_out)?;
    relu_backward_inplace(&mut d_z2, &trace.z2);
    let w2 = mat_mul_tn(&trace.a1, &d_z2)?;
    let b2 = col_sums(&d_z2);

    let mut d_z1 = mat_mul_nt(&d_z2, &params.w2)?;
    relu_backward_inplace(&mut d_z1, &trace.z1);
    let w1 = mat_mul_tn(&trace.input, &d_z1)?;
    let b1 = col_sums(&d_z1);

    Ok(MlpParams {
        w1,
        b1,
        w2,
        b2,
        w_out,
        b_out,
    })
}

/// `1` iff `p_i >= threshold`.
pub fn predict_hard(p: &[f64], threshold: f64) -> Vec<bool> {
    p.iter().map(|&v| v >= threshold).collect()
}

/// On-disk model: layer sizes, seed and flat weight arrays, optionally with
/// the feature encoder the model was trained against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub dims: Dims,
    pub seed: u64,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<Encoder>,
}

impl Checkpoint {
    pub const FORMAT: &'static str = "fairlag-checkpoint/1";

    pub fn new(params: &MlpParams, seed: u64, encoder: Option<Encoder>) -> Self {
        Self {
            format: Self::FORMAT.to_string(),
            dims: params.dims(),
            seed,
            w1: params.w1.as_slice().to_vec(),
            b1: params.b1.clone(),
            w2: params.w2.as_slice().to_vec(),
            b2: params.b2.clone(),
            w_out: params.w_out.as_slice().to_vec(),
            b_out: params.b_out.clone(),
            encoder,
        }
    }

    pub fn params(&self) -> Result<MlpParams> {
        let Dims { d, h1, h2 } = self.dims;
        let check = |name: &str, v: &[f64], n: usize| {
            if v.len() == n {
                Ok(())
            } else {
                Err(Error::Schema(format!(
                    "checkpoint field {name} has {} values, dims need {n}",
                    v.len()
                )))
            }
        };
        check("b1", &self.b1, h1)?;
        check("b2", &self.b2, h2)?;
        check("b_out", &self.b_out, 2)?;
        check("w1", &self.w1, d * h1)?;
        check("w2", &self.w2, h1 * h2)?;
        check("w_out", &self.w_out, h2 * 2)?;
        Ok(MlpParams {
            w1: Matrix::from_vec(d, h1, self.w1.clone())?,
            b1: self.b1.clone(),
            w2: Matrix::from_vec(h1, h2, self.w2.clone())?,
            b2: self.b2.clone(),
            w_out: Matrix::from_vec(h2, 2, self.w_out.clone())?,
            b_out: self.b_out.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
