//! Training objective: reconstruction MSE + soft-DTW + FGSM adversarial
//! reconstruction, summed with configurable weights.

mod soft_dtw;

pub use soft_dtw::{soft_alignment, soft_dtw, soft_dtw_with_grad, SoftDtwOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Mlp, ParameterSet, Tape};

/// Mean of squared differences over all entries.
pub fn mse_loss(reconstruction: &[f64], target: &[f64]) -> Result<f64> {
    check_same(reconstruction, target)?;
    let n = target.len() as f64;
    Ok(reconstruction.iter().zip(target).map(|(r, t)| (r - t) * (r - t)).sum::<f64>() / n)
}

/// Gradient of [`mse_loss`] with respect to `reconstruction`.
pub fn mse_grad(reconstruction: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_same(reconstruction, target)?;
    let scale = 2.0 / target.len() as f64;
    Ok(reconstruction.iter().zip(target).map(|(r, t)| scale * (r - t)).collect())
}

fn check_same(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::shape("mse operands", &[b.len()], &[a.len()]));
    }
    Ok(())
}

/// Gradient buffers for a model made of one or more parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<ParameterSet>);

impl Gradients {
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_scaled(b, scale);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.iter_mut().for_each(|p| p.scale(factor));
    }

    pub fn first_non_finite(&self) -> Option<&str> {
        self.0.iter().find_map(|p| p.first_non_finite())
    }
}

/// A differentiable map from a window to its reconstruction.
pub trait Reconstructor {
    type Tape;

    fn forward_recorded(&self, input: &[f64]) -> Result<(Vec<f64>, Self::Tape)>;

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    fn backward(&self, tape: &Self::Tape, grad_output: &[f64], grads: &mut Gradients) -> Vec<f64>;

    fn zero_gradients(&self) -> Gradients;

    fn reconstruct(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_recorded(input)?.0)
    }
}

impl Reconstructor for Mlp {
    type Tape = Tape;

    fn forward_recorded(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        Mlp::forward_recorded(self, input)
    }

    fn backward(&self, tape: &Tape, grad_output: &[f64], grads: &mut Gradients) -> Vec<f64> {
        Mlp::backward(self, tape, grad_output, &mut grads.0[0])
    }

    fn zero_gradients(&self) -> Gradients {
        Gradients(vec![self.params().zeros_like()])
    }
}

/// Weights and hyperparameters of the composite objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// Soft-DTW temperature in squared sine-scaled units.
    pub dtw_gamma: f64,
    /// FGSM step in sine-scaled units.
    pub fgsm_epsilon: f64,
    pub mse_weight: f64,
    pub dtw_weight: f64,
    pub fgsm_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            dtw_gamma: 0.1,
            fgsm_epsilon: 0.01,
            mse_weight: 1.0,
            dtw_weight: 1.0,
            fgsm_weight: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dtw_gamma > 0.0) {
            return Err(Error::domain(format!("dtw_gamma must be > 0, got {}", self.dtw_gamma)));
        }
        if !(self.fgsm_epsilon >= 0.0) {
            return Err(Error::domain(format!("fgsm_epsilon must be >= 0, got {}", self.fgsm_epsilon)));
        }
        for (w, name) in [
            (self.mse_weight, "mse_weight"),
            (self.dtw_weight, "dtw_weight"),
            (self.fgsm_weight, "fgsm_weight"),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::domain(format!("{name} must be a finite value >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// Unweighted values of the three terms plus the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub mse: f64,
    pub dtw: f64,
    pub fgsm: f64,
    pub total: f64,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `clamp(x + ε·sign(∇ₓ mse(model(x), x)), -1, 1)`; the target `x` is held
/// fixed while differentiating.
pub fn fgsm_adversarial_input<M: Reconstructor>(model: &M, input: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("fgsm epsilon must be >= 0, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(input.to_vec());
    }
    let (recon, tape) = model.forward_recorded(input)?;
    let mut scratch = model.zero_gradients();
    let gx = model.backward(&tape, &mse_grad(&recon, input)?, &mut scratch);
    Ok(perturb(input, &gx, epsilon))
}

fn perturb(input: &[f64], direction: &[f64], epsilon: f64) -> Vec<f64> {
    input
        .iter()
        .zip(direction)
        .map(|(x, g)| (x + epsilon * sign(*g)).clamp(-1.0, 1.0))
        .collect()
}

/// Reconstruction MSE of the FGSM-perturbed input against the clean input.
pub fn fgsm_loss<M: Reconstructor>(model: &M, input: &[f64], epsilon: f64) -> Result<f64> {
    let adv = fgsm_adversarial_input(model, input, epsilon)?;
    mse_loss(&model.reconstruct(&adv)?, input)
}

/// Weighted composite objective on one window and its parameter gradient.
///
/// The FGSM direction is computed from the clean forward pass and then held
/// constant, so gradients of the adversarial term reach the parameters only
/// through the second forward pass.
pub fn composite_loss<M: Reconstructor>(model: &M, input: &[f64], config: &LossConfig) -> Result<(LossTerms, Gradients)> {
    let mut grads = model.zero_gradients();
    let terms = composite_loss_into(model, input, config, &mut grads)?;
    Ok((terms, grads))
}

/// [`composite_loss`] accumulating into existing gradient buffers.
pub fn composite_loss_into<M: Reconstructor>(
    model: &M,
    input: &[f64],
    config: &LossConfig,
    grads: &mut Gradients,
) -> Result<LossTerms> {
    let (recon, tape) = model.forward_recorded(input)?;
    let mse = mse_loss(&recon, input)?;
    let g_mse = mse_grad(&recon, input)?;
    let dtw_out = (config.dtw_weight > 0.0)
        .then(|| soft_dtw_with_grad(input, &recon, 2, config.dtw_gamma))
        .transpose()?;
    let dtw = match &dtw_out {
        Some(d) => d.value,
        None => soft_dtw(input, &recon, 2, config.dtw_gamma)?,
    };

    let use_fgsm = config.fgsm_weight > 0.0;
    let mut adv_input = None;
    let mut g_out = vec![0.0; recon.len()];
    if use_fgsm && config.fgsm_epsilon > 0.0 {
        // MSE-only backward gives the FGSM direction and the MSE parameter
        // gradient in one pass.
        let gx = if config.mse_weight > 0.0 {
            // a positive seed scale leaves the gradient sign unchanged
            let seed: Vec<f64> = g_mse.iter().map(|g| g * config.mse_weight).collect();
            model.backward(&tape, &seed, grads)
        } else {
            model.backward(&tape, &g_mse, &mut model.zero_gradients())
        };
        adv_input = Some(perturb(input, &gx, config.fgsm_epsilon));
    } else {
        for (g, m) in g_out.iter_mut().zip(&g_mse) {
            *g += config.mse_weight * m;
        }
    }
    if let Some(d) = &dtw_out {
        for (g, db) in g_out.iter_mut().zip(&d.grad_b) {
            *g += config.dtw_weight * db;
        }
    }
    if g_out.iter().any(|g| *g != 0.0) {
        model.backward(&tape, &g_out, grads);
    }

    let fgsm = if use_fgsm {
        match adv_input {
            Some(adv) => {
                let (recon_adv, tape_adv) = model.forward_recorded(&adv)?;
                let value = mse_loss(&recon_adv, input)?;
                let mut g = mse_grad(&recon_adv, input)?;
                g.iter_mut().for_each(|v| *v *= config.fgsm_weight);
                model.backward(&tape_adv, &g, grads);
                value
            }
            None => {
                // zero epsilon: the adversarial term is the clean MSE again
                let mut g = g_mse.clone();
                g.iter_mut().for_each(|v| *v *= config.fgsm_weight);
                model.backward(&tape, &g, grads);
                mse
            }
        }
    } else {
        fgsm_loss(model, input, config.fgsm_epsilon)?
    };

    let total = config.mse_weight * mse + config.dtw_weight * dtw + config.fgsm_weight * fgsm;
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("composite loss {total}")));
    }
    Ok(LossTerms { mse, dtw, fgsm, total })
}
