//! Single-layer LSTM cell with backpropagation through time.
//!
//! Gate rows are stacked as `[input, forget, candidate, output]`, each
//! `hidden` rows tall.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{dot, sigmoid};
use super::params::{ParameterSet, Tensor};
use crate::error::{Error, Result};

const W_INPUT: usize = 0;
const W_HIDDEN: usize = 1;
const BIAS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    input_dim: usize,
    hidden_dim: usize,
    params: ParameterSet,
}

/// Cached activations of one step.
#[derive(Debug, Clone)]
struct StepRecord {
    input: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-nonlinearity gates, `4 * hidden`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Forward record of an unrolled sequence.
#[derive(Debug, Clone, Default)]
pub struct SequenceTape {
    steps: Vec<StepRecord>,
}

impl SequenceTape {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl LstmCell {
    pub fn zeros(input_dim: usize, hidden_dim: usize, prefix: &str) -> Self {
        let mut params = ParameterSet::new();
        params.push(Tensor::zeros(format!("{prefix}.w_input"), &[4 * hidden_dim, input_dim]));
        params.push(Tensor::zeros(format!("{prefix}.w_hidden"), &[4 * hidden_dim, hidden_dim]));
        params.push(Tensor::zeros(format!("{prefix}.bias"), &[4 * hidden_dim]));
        Self {
            input_dim,
            hidden_dim,
            params,
        }
    }

    /// Glorot-uniform weight matrices per gate block, zero biases.
    pub fn glorot<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, prefix: &str, rng: &mut R) -> Self {
        let mut cell = Self::zeros(input_dim, hidden_dim, prefix);
        for (t, fan_in) in [(W_INPUT, input_dim), (W_HIDDEN, hidden_dim)] {
            let limit = (6.0 / (fan_in + hidden_dim) as f64).sqrt();
            for w in cell.params.values_mut(t) {
                *w = rng.random_range(-limit..=limit);
            }
        }
        cell
    }

    pub fn from_parameters(input_dim: usize, hidden_dim: usize, prefix: &str, params: ParameterSet) -> Result<Self> {
        Self::zeros(input_dim, hidden_dim, prefix)
            .params
            .check_compatible(&params, prefix)?;
        Ok(Self {
            input_dim,
            hidden_dim,
            params,
        })
    }

    /// Re-checks parameter shapes and finiteness, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        let prefix = self
            .params
            .iter()
            .next()
            .and_then(|t| t.name.rsplit_once('.'))
            .map(|(p, _)| p.to_string())
            .unwrap_or_default();
        Self::zeros(self.input_dim, self.hidden_dim, &prefix)
            .params
            .check_compatible(&self.params, "lstm")?;
        match self.params.first_non_finite() {
            Some(name) => Err(Error::NonFinite(format!("parameter {name}"))),
            None => Ok(()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    fn check(&self, state: &LstmState, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::shape("lstm input", &[self.input_dim], &[input.len()]));
        }
        if state.h.len() != self.hidden_dim || state.c.len() != self.hidden_dim {
            return Err(Error::shape(
                "lstm state",
                &[self.hidden_dim, self.hidden_dim],
                &[state.h.len(), state.c.len()],
            ));
        }
        Ok(())
    }

    fn compute(&self, state: &LstmState, input: &[f64]) -> StepRecord {
        let hd = self.hidden_dim;
        let w_in = self.params.values(W_INPUT);
        let w_h = self.params.values(W_HIDDEN);
        let bias = self.params.values(BIAS);
        let mut gates = Vec::with_capacity(4 * hd);
        for r in 0..4 * hd {
            let z = bias[r]
                + dot(&w_in[r * self.input_dim..(r + 1) * self.input_dim], input)
                + dot(&w_h[r * hd..(r + 1) * hd], &state.h);
            gates.push(if (2 * hd..3 * hd).contains(&r) { z.tanh() } else { sigmoid(z) });
        }
        let mut c = Vec::with_capacity(hd);
        let mut tanh_c = Vec::with_capacity(hd);
        for k in 0..hd {
            let ck = gates[hd + k] * state.c[k] + gates[k] * gates[2 * hd + k];
            c.push(ck);
            tanh_c.push(ck.tanh());
        }
        StepRecord {
            input: input.to_vec(),
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            gates,
            c,
            tanh_c,
        }
    }

    fn next_state(&self, rec: &StepRecord) -> LstmState {
        let hd = self.hidden_dim;
        let h = (0..hd).map(|k| rec.gates[3 * hd + k] * rec.tanh_c[k]).collect();
        LstmState { h, c: rec.c.clone() }
    }

    /// One gated update; the output is the new hidden state.
    pub fn step(&self, state: &LstmState, input: &[f64]) -> Result<(LstmState, Vec<f64>)> {
        self.check(state, input)?;
        let rec = self.compute(state, input);
        let next = self.next_state(&rec);
        let out = next.h.clone();
        Ok((next, out))
    }

    /// Runs the cell over `inputs` from `initial`, returning every hidden
    /// state and a tape for [`LstmCell::backward_sequence`].
    pub fn forward_sequence(&self, initial: &LstmState, inputs: &[Vec<f64>]) -> Result<(Vec<LstmState>, SequenceTape)> {
        let mut state = initial.clone();
        let mut states = Vec::with_capacity(inputs.len());
        let mut tape = SequenceTape {
            steps: Vec::with_capacity(inputs.len()),
        };
        for x in inputs {
            self.check(&state, x)?;
            let rec = self.compute(&state, x);
            state = self.next_state(&rec);
            states.push(state.clone());
            tape.steps.push(rec);
        }
        Ok((states, tape))
    }

    /// Backpropagation through time.
    ///
    /// `grad_h[t]` is the loss gradient with respect to the hidden output of
    /// step `t` (zeros where the output is unused). Parameter gradients
    /// accumulate into `grads`; the per-step input gradients are returned.
    pub fn backward_sequence(&self, tape: &SequenceTape, grad_h: &[Vec<f64>], grads: &mut ParameterSet) -> Vec<Vec<f64>> {
        let hd = self.hidden_dim;
        let id = self.input_dim;
        let w_in = self.params.values(W_INPUT);
        let w_h = self.params.values(W_HIDDEN);
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut grad_inputs = vec![Vec::new(); tape.steps.len()];
        let mut dz = vec![0.0; 4 * hd];
        for (t, rec) in tape.steps.iter().enumerate().rev() {
            let g = &rec.gates;
            for k in 0..hd {
                let dh = grad_h[t][k] + dh_next[k];
                let (i, f, c_hat, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
                let tc = rec.tanh_c[k];
                let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                dz[k] = dc * c_hat * i * (1.0 - i);
                dz[hd + k] = dc * rec.c_prev[k] * f * (1.0 - f);
                dz[2 * hd + k] = dc * i * (1.0 - c_hat * c_hat);
                dz[3 * hd + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            let mut dx = vec![0.0; id];
            let mut dh_prev = vec![0.0; hd];
            {
                let gb = grads.values_mut(BIAS);
                for r in 0..4 * hd {
                    gb[r] += dz[r];
                }
            }
            {
                let gw = grads.values_mut(W_INPUT);
                for r in 0..4 * hd {
                    let d = dz[r];
                    let row = &w_in[r * id..(r + 1) * id];
                    let grow = &mut gw[r * id..(r + 1) * id];
                    for j in 0..id {
                        grow[j] += d * rec.input[j];
                        dx[j] += d * row[j];
                    }
                }
            }
            {
                let gw = grads.values_mut(W_HIDDEN);
                for r in 0..4 * hd {
                    let d = dz[r];
                    let row = &w_h[r * hd..(r + 1) * hd];
                    let grow = &mut gw[r * hd..(r + 1) * hd];
                    for j in 0..hd {
                        grow[j] += d * rec.h_prev[j];
                        dh_prev[j] += d * row[j];
                    }
                }
            }
            dh_next = dh_prev;
            grad_inputs[t] = dx;
        }
        grad_inputs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_keep_state_bounded() {
        // all gates sit at sigmoid(0) = 0.5 and the candidate at tanh(0) = 0
        let cell = LstmCell::zeros(4, 8, "l");
        let mut s = LstmState::zeros(8);
        for _ in 0..20 {
            let (n, out) = cell.step(&s, &[1.0, -2.0, 3.0, 0.5]).unwrap();
            assert!(out.iter().all(|v| v.abs() < 1.0));
            assert!(n.c.iter().all(|v| *v == 0.0));
            s = n;
        }
    }

    #[test]
    fn shape_errors() {
        let cell = LstmCell::zeros(4, 8, "l");
        assert!(cell.step(&LstmState::zeros(8), &[1.0]).is_err());
        assert!(cell.step(&LstmState::zeros(3), &[0.0; 4]).is_err());
    }

    #[test]
    fn same_seed_same_trajectory() {
        let run = || {
            let cell = LstmCell::glorot(2, 5, "l", &mut ChaCha8Rng::seed_from_u64(9));
            let xs: Vec<Vec<f64>> = (0..10).map(|t| vec![(t as f64).sin(), 0.3]).collect();
            cell.forward_sequence(&LstmState::zeros(5), &xs).unwrap().0
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn step_matches_sequence() {
        let cell = LstmCell::glorot(2, 3, "l", &mut ChaCha8Rng::seed_from_u64(2));
        let xs = vec![vec![0.1, 0.2], vec![-0.4, 0.9]];
        let (states, _) = cell.forward_sequence(&LstmState::zeros(3), &xs).unwrap();
        let (s1, _) = cell.step(&LstmState::zeros(3), &xs[0]).unwrap();
        let (s2, _) = cell.step(&s1, &xs[1]).unwrap();
        assert_eq!(states[1], s2);
    }
}
