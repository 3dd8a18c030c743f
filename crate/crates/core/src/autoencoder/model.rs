use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{Gradients, LossConfig, Reconstructor};
use crate::nn::{Activation, Mlp, MlpShape, Tape};

/// Width of the bounded latent code.
pub const LATENT_DIM: usize = 32;

/// Layer stacks of the encoder and decoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub window_len: usize,
    pub encoder: MlpShape,
    pub decoder: MlpShape,
}

impl Architecture {
    /// `2·L → 96 → 64 → 48 → 32` with ELU on the hidden layers and Tanh on
    /// the latent, mirrored for the decoder with a Tanh output.
    pub fn standard(window_len: usize) -> Self {
        let input = 2 * window_len;
        let hidden = [96, 64, 48];
        let acts = vec![Activation::Elu, Activation::Elu, Activation::Elu, Activation::Tanh];
        let mut enc = vec![input];
        enc.extend(hidden);
        enc.push(LATENT_DIM);
        let dec: Vec<usize> = enc.iter().rev().copied().collect();
        Self {
            window_len,
            encoder: MlpShape::new(enc, acts.clone()).expect("static encoder shape"),
            decoder: MlpShape::new(dec, acts).expect("static decoder shape"),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.encoder.input_dim() == 2 * self.window_len
            && self.decoder.output_dim() == self.encoder.input_dim()
            && self.decoder.input_dim() == self.encoder.output_dim()
            && self.encoder.activations.last() == Some(&Activation::Tanh)
            && self.decoder.activations.last() == Some(&Activation::Tanh);
        if !ok {
            return Err(Error::shape(
                "autoencoder architecture",
                &[2 * self.window_len, self.encoder.output_dim(), 2 * self.window_len],
                &[self.encoder.input_dim(), self.decoder.input_dim(), self.decoder.output_dim()],
            ));
        }
        Ok(())
    }
}

impl Default for Architecture {
    fn default() -> Self {
        Self::standard(crate::signal::DEFAULT_WINDOW_LEN)
    }
}

/// Latent noise scale as a function of the training epoch: zero during the
/// warmup, then a linear ramp reaching `max_sigma` at the final epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub max_sigma: f64,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self {
            epochs: 50,
            warmup_epochs: 10,
            max_sigma: 0.1,
        }
    }
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.warmup_epochs > self.epochs || !(self.max_sigma >= 0.0) {
            return Err(Error::domain(format!("invalid noise schedule {self:?}")));
        }
        Ok(())
    }

    /// σ for a zero-based epoch index.
    pub fn sigma(&self, epoch: usize) -> f64 {
        if epoch < self.warmup_epochs {
            return 0.0;
        }
        let last = self.epochs.saturating_sub(1);
        if last <= self.warmup_epochs {
            return self.max_sigma;
        }
        let frac = (epoch.min(last) - self.warmup_epochs) as f64 / (last - self.warmup_epochs) as f64;
        self.max_sigma * frac
    }
}

/// A named latent noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyLevel {
    pub name: String,
    pub sigma: f64,
}

impl PrivacyLevel {
    pub fn new(name: impl Into<String>, sigma: f64) -> Result<Self> {
        let level = Self {
            name: name.into(),
            sigma,
        };
        level.validate()?;
        Ok(level)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain(format!("privacy level {} has invalid sigma {}", self.name, self.sigma)));
        }
        if self.name.is_empty() || self.name.eq_ignore_ascii_case("raw") {
            return Err(Error::domain(format!("privacy level name {:?} is reserved or empty", self.name)));
        }
        Ok(())
    }

    /// No latent noise: privacy comes from the bottleneck alone.
    pub fn none() -> Self {
        Self {
            name: "AE-None".into(),
            sigma: 0.0,
        }
    }

    pub fn medium() -> Self {
        Self {
            name: "AE-0.1".into(),
            sigma: 0.1,
        }
    }

    pub fn high() -> Self {
        Self {
            name: "AE-0.2".into(),
            sigma: 0.2,
        }
    }

    pub fn standard_levels() -> Vec<Self> {
        vec![Self::none(), Self::medium(), Self::high()]
    }
}

/// Provenance recorded with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub schedule: NoiseSchedule,
    pub loss: LossConfig,
    pub final_sigma: f64,
    pub training_windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    architecture: Architecture,
    encoder: Mlp,
    decoder: Mlp,
    pub metadata: Option<TrainingMetadata>,
}

impl AutoencoderModel {
    pub fn zeros(architecture: Architecture) -> Result<Self> {
        architecture.validate()?;
        Ok(Self {
            encoder: Mlp::zeros(architecture.encoder.clone(), "encoder"),
            decoder: Mlp::zeros(architecture.decoder.clone(), "decoder"),
            architecture,
            metadata: None,
        })
    }

    pub fn glorot<R: Rng + ?Sized>(architecture: Architecture, rng: &mut R) -> Result<Self> {
        architecture.validate()?;
        Ok(Self {
            encoder: Mlp::glorot(architecture.encoder.clone(), "encoder", rng),
            decoder: Mlp::glorot(architecture.decoder.clone(), "decoder", rng),
            architecture,
            metadata: None,
        })
    }

    pub fn from_parts(architecture: Architecture, encoder: Mlp, decoder: Mlp, metadata: Option<TrainingMetadata>) -> Result<Self> {
        architecture.validate()?;
        if encoder.shape() != &architecture.encoder || decoder.shape() != &architecture.decoder {
            return Err(Error::shape(
                "autoencoder parts",
                &architecture.encoder.dims,
                &encoder.shape().dims,
            ));
        }
        Ok(Self {
            architecture,
            encoder,
            decoder,
            metadata,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn window_len(&self) -> usize {
        self.architecture.window_len
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub(crate) fn networks_mut(&mut self) -> (&mut Mlp, &mut Mlp) {
        (&mut self.encoder, &mut self.decoder)
    }

    /// Latent code of a flattened window; every entry lies in `(-1, 1)`.
    pub fn encode(&self, window: &[f64]) -> Result<Vec<f64>> {
        self.encoder.forward(window)
    }

    /// Reconstruction from a (possibly noised) latent code, in `(-1, 1)`.
    pub fn decode(&self, latent: &[f64]) -> Result<Vec<f64>> {
        self.decoder.forward(latent)
    }

    /// A view that adds the fixed `noise` vector to the latent code.
    pub fn with_noise<'a>(&'a self, noise: Option<&'a [f64]>) -> NoisedAutoencoder<'a> {
        NoisedAutoencoder { model: self, noise }
    }
}

/// Adds independent `N(0, σ²)` noise to each latent coordinate. The result is
/// not clamped back to `[-1, 1]`.
pub fn inject_noise<R: Rng + ?Sized>(latent: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = latent.to_vec();
    inject_noise_in_place(&mut out, sigma, rng)?;
    Ok(out)
}

pub fn inject_noise_in_place<R: Rng + ?Sized>(latent: &mut [f64], sigma: f64, rng: &mut R) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("noise scale must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
    for v in latent.iter_mut() {
        *v += normal.sample(rng);
    }
    Ok(())
}

/// Encoder → additive latent noise → decoder, differentiable end to end.
pub struct NoisedAutoencoder<'a> {
    model: &'a AutoencoderModel,
    noise: Option<&'a [f64]>,
}

impl Reconstructor for NoisedAutoencoder<'_> {
    type Tape = (Tape, Tape);

    fn forward_recorded(&self, input: &[f64]) -> Result<(Vec<f64>, Self::Tape)> {
        let (mut latent, enc_tape) = self.model.encoder.forward_recorded(input)?;
        if let Some(noise) = self.noise {
            if noise.len() != latent.len() {
                return Err(Error::shape("latent noise", &[latent.len()], &[noise.len()]));
            }
            latent.iter_mut().zip(noise).for_each(|(l, n)| *l += n);
        }
        let (out, dec_tape) = self.model.decoder.forward_recorded(&latent)?;
        Ok((out, (enc_tape, dec_tape)))
    }

    fn backward(&self, tape: &Self::Tape, grad_output: &[f64], grads: &mut Gradients) -> Vec<f64> {
        let (enc_grads, dec_grads) = grads.0.split_at_mut(1);
        let g_latent = self.model.decoder.backward(&tape.1, grad_output, &mut dec_grads[0]);
        self.model.encoder.backward(&tape.0, &g_latent, &mut enc_grads[0])
    }

    fn zero_gradients(&self) -> Gradients {
        Gradients(vec![
            self.model.encoder.params().zeros_like(),
            self.model.decoder.params().zeros_like(),
        ])
    }
}
