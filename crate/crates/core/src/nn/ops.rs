//! Scalar and vector kernels with their analytic derivatives.

use crate::error::{Error, Result};

/// ELU with `alpha = 1`.
#[inline]
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// Derivative of [`elu`] expressed through its output `y`.
#[inline]
pub fn elu_grad_from_output(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        y + 1.0
    }
}

#[inline]
pub fn tanh_act(x: f64) -> f64 {
    x.tanh()
}

#[inline]
pub fn tanh_grad_from_output(y: f64) -> f64 {
    1.0 - y * y
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Element-wise nonlinearity following a linear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Elu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Elu => elu(x),
            Activation::Tanh => tanh_act(x),
        }
    }

    #[inline]
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Elu => elu_grad_from_output(y),
            Activation::Tanh => tanh_grad_from_output(y),
        }
    }
}

/// `weights · input + bias` with `weights` row-major `[out, in]`.
pub fn linear(input: &[f64], weights: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    let out_dim = bias.len();
    let in_dim = input.len();
    if weights.len() != out_dim * in_dim {
        return Err(Error::shape("linear weights", &[out_dim, in_dim], &[weights.len()]));
    }
    let mut out = bias.to_vec();
    linear_into(input, weights, &mut out);
    Ok(out)
}

/// Adds `weights · input` into `out`; shapes are assumed checked.
#[inline]
pub(crate) fn linear_into(input: &[f64], weights: &[f64], out: &mut [f64]) {
    let in_dim = input.len();
    for (o, row) in out.iter_mut().zip(weights.chunks_exact(in_dim)) {
        *o += dot(row, input);
    }
}

/// Backward pass of [`linear`]. Accumulates into the weight and bias
/// gradients and returns the gradient with respect to `input`.
pub(crate) fn linear_backward(
    input: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    grad_weights: &mut [f64],
    grad_bias: &mut [f64],
) -> Vec<f64> {
    let in_dim = input.len();
    let mut grad_in = vec![0.0; in_dim];
    for (o, &g) in grad_out.iter().enumerate() {
        grad_bias[o] += g;
        if g == 0.0 {
            continue;
        }
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        let grow = &mut grad_weights[o * in_dim..(o + 1) * in_dim];
        for i in 0..in_dim {
            grow[i] += g * input[i];
            grad_in[i] += g * row[i];
        }
    }
    grad_in
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators keep the loop vectorizable
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}
