//! Feed-forward stacks of linear layers with a recorded forward pass.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{linear_backward, linear_into, Activation};
use super::params::{ParameterSet, Tensor};
use crate::error::{Error, Result};

/// Shape of a stack: `dims[k] -> dims[k + 1]` followed by `activations[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub dims: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpShape {
    pub fn new(dims: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if dims.len() < 2 || activations.len() + 1 != dims.len() || dims.contains(&0) {
            return Err(Error::domain(format!(
                "invalid layer stack: dims {dims:?} with {} activations",
                activations.len()
            )));
        }
        Ok(Self { dims, activations })
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.activations.len()
    }

    /// Parameter names and shapes in storage order.
    pub fn parameter_shapes(&self, prefix: &str) -> Vec<(String, Vec<usize>)> {
        (0..self.layers())
            .flat_map(|k| {
                [
                    (format!("{prefix}.{k}.weight"), vec![self.dims[k + 1], self.dims[k]]),
                    (format!("{prefix}.{k}.bias"), vec![self.dims[k + 1]]),
                ]
            })
            .collect()
    }
}

/// What one tape entry computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Linear { layer: usize },
    Activation(Activation),
}

/// One recorded operation with the activations its backward step needs.
///
/// `Linear` nodes cache their input; activation nodes cache their output.
#[derive(Debug, Clone)]
pub struct TapeNode {
    pub kind: OpKind,
    pub cached: Vec<f64>,
}

/// Forward record of a single evaluation. Nodes are appended in execution
/// order and replayed in reverse, each exactly once.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    pub nodes: Vec<TapeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    shape: MlpShape,
    prefix: String,
    params: ParameterSet,
}

impl Mlp {
    /// Zero-initialized stack.
    pub fn zeros(shape: MlpShape, prefix: &str) -> Self {
        let mut params = ParameterSet::new();
        for (name, s) in shape.parameter_shapes(prefix) {
            params.push(Tensor::zeros(name, &s));
        }
        Self {
            shape,
            prefix: prefix.to_string(),
            params,
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(shape: MlpShape, prefix: &str, rng: &mut R) -> Self {
        let mut mlp = Self::zeros(shape, prefix);
        for k in 0..mlp.shape.layers() {
            let (fan_in, fan_out) = (mlp.shape.dims[k], mlp.shape.dims[k + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in mlp.params.values_mut(2 * k) {
                *w = rng.random_range(-limit..=limit);
            }
        }
        mlp
    }

    /// Wraps existing parameters, checking them against `shape`.
    pub fn from_parameters(shape: MlpShape, prefix: &str, params: ParameterSet) -> Result<Self> {
        let expected = Self::zeros(shape.clone(), prefix);
        expected.params.check_compatible(&params, prefix)?;
        if let Some(name) = params.first_non_finite() {
            return Err(Error::NonFinite(format!("parameter {name}")));
        }
        Ok(Self {
            shape,
            prefix: prefix.to_string(),
            params,
        })
    }

    /// Re-checks shape consistency and finiteness, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        let shape = MlpShape::new(self.shape.dims.clone(), self.shape.activations.clone())?;
        Self::from_parameters(shape, &self.prefix, self.params.clone()).map(|_| ())
    }

    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.shape.input_dim() {
            return Err(Error::shape(
                format!("{} input", self.prefix),
                &[self.shape.input_dim()],
                &[input.len()],
            ));
        }
        Ok(())
    }

    fn layer(&self, k: usize, input: &[f64]) -> Vec<f64> {
        let mut out = self.params.values(2 * k + 1).to_vec();
        linear_into(input, self.params.values(2 * k), &mut out);
        out
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut h = input.to_vec();
        for k in 0..self.shape.layers() {
            let act = self.shape.activations[k];
            h = self.layer(k, &h);
            if act != Activation::Identity {
                h.iter_mut().for_each(|v| *v = act.apply(*v));
            }
        }
        Ok(h)
    }

    pub fn forward_recorded(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_input(input)?;
        let mut tape = Tape {
            nodes: Vec::with_capacity(2 * self.shape.layers()),
        };
        let mut h = input.to_vec();
        for k in 0..self.shape.layers() {
            let z = self.layer(k, &h);
            tape.nodes.push(TapeNode {
                kind: OpKind::Linear { layer: k },
                cached: h,
            });
            let act = self.shape.activations[k];
            h = z;
            if act != Activation::Identity {
                h.iter_mut().for_each(|v| *v = act.apply(*v));
                tape.nodes.push(TapeNode {
                    kind: OpKind::Activation(act),
                    cached: h.clone(),
                });
            }
        }
        Ok((h, tape))
    }

    /// Replays `tape` backwards, accumulating parameter gradients into
    /// `grads` and returning the gradient with respect to the input.
    pub fn backward(&self, tape: &Tape, grad_output: &[f64], grads: &mut ParameterSet) -> Vec<f64> {
        let mut g = grad_output.to_vec();
        for node in tape.nodes.iter().rev() {
            match node.kind {
                OpKind::Activation(act) => {
                    for (gi, &y) in g.iter_mut().zip(&node.cached) {
                        *gi *= act.grad_from_output(y);
                    }
                }
                OpKind::Linear { layer } => {
                    let (gw, gb) = grads.pair_mut(2 * layer, 2 * layer + 1);
                    g = linear_backward(&node.cached, self.params.values(2 * layer), &g, gw, gb);
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_bias() {
        let shape = MlpShape::new(vec![3, 2], vec![Activation::Identity]).unwrap();
        let mut m = Mlp::zeros(shape, "m");
        m.params_mut().values_mut(1).copy_from_slice(&[0.5, -1.0]);
        assert_eq!(m.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn recorded_forward_matches_plain_forward() {
        let shape = MlpShape::new(vec![5, 4, 3], vec![Activation::Elu, Activation::Tanh]).unwrap();
        let m = Mlp::glorot(shape, "m", &mut ChaCha8Rng::seed_from_u64(3));
        let x = [0.1, -0.3, 0.7, 0.2, -0.9];
        let (y, tape) = m.forward_recorded(&x).unwrap();
        assert_eq!(y, m.forward(&x).unwrap());
        assert_eq!(tape.nodes.len(), 4);
    }

    #[test]
    fn glorot_respects_limit() {
        let shape = MlpShape::new(vec![8, 4], vec![Activation::Identity]).unwrap();
        let m = Mlp::glorot(shape, "m", &mut ChaCha8Rng::seed_from_u64(1));
        let limit = (6.0f64 / 12.0).sqrt();
        assert!(m.params().values(0).iter().all(|w| w.abs() <= limit));
        assert!(m.params().values(1).iter().all(|b| *b == 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let shape = MlpShape::new(vec![3, 2], vec![Activation::Identity]).unwrap();
        assert!(Mlp::zeros(shape, "m").forward(&[1.0]).is_err());
        assert!(MlpShape::new(vec![3], vec![]).is_err());
    }
}
