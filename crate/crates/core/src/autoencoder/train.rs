use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{inject_noise_in_place, Architecture, AutoencoderModel, NoiseSchedule, TrainingMetadata};
use crate::error::{Error, Result};
use crate::losses::{composite_loss_into, Gradients, LossConfig, LossTerms, Reconstructor};
use crate::nn::{chunked_reduce, AdamConfig, AdamState};
use crate::signal::WindowBatch;

/// Windows per parallel work unit when accumulating batch gradients.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub warmup_epochs: usize,
    pub max_sigma: f64,
    pub loss: LossConfig,
    /// Set in code; pipeline runs derive it from the master seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 3e-4,
            batch_size: 256,
            warmup_epochs: 10,
            max_sigma: 0.1,
            loss: LossConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> NoiseSchedule {
        NoiseSchedule {
            epochs: self.epochs,
            warmup_epochs: self.warmup_epochs,
            max_sigma: self.max_sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::domain("batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        self.schedule().validate()?;
        self.loss.validate()
    }
}

/// Mean loss terms of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub sigma: f64,
    pub mse: f64,
    pub dtw: f64,
    pub fgsm: f64,
    pub total: f64,
}

/// Trains a fresh standard-architecture autoencoder on fully valid windows.
pub fn train(dataset: &WindowBatch, config: &TrainConfig) -> Result<(AutoencoderModel, Vec<EpochLog>)> {
    train_with_progress(dataset, config, |_| {})
}

pub fn train_with_progress<F>(dataset: &WindowBatch, config: &TrainConfig, mut progress: F) -> Result<(AutoencoderModel, Vec<EpochLog>)>
where
    F: FnMut(&EpochLog),
{
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::domain("autoencoder training set is empty"));
    }
    let window_len = dataset.windows[0].len();
    if let Some(w) = dataset.windows.iter().find(|w| !w.is_fully_valid()) {
        return Err(Error::domain(format!(
            "training window {}@{} contains invalid samples",
            w.origin().recording,
            w.origin().start
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = AutoencoderModel::glorot(Architecture::standard(window_len), &mut rng)?;
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut enc_state = AdamState::new(model.encoder().params(), adam);
    let mut dec_state = AdamState::new(model.decoder().params(), adam);
    let schedule = config.schedule();
    let latent_dim = model.architecture().latent_dim();

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut logs = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let sigma = schedule.sigma(epoch);
        order.shuffle(&mut rng);
        let mut sums = LossTerms::default();
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let mut jobs: Vec<(usize, Vec<f64>)> = Vec::with_capacity(batch.len());
            for &idx in batch {
                let mut noise = vec![0.0; latent_dim];
                inject_noise_in_place(&mut noise, sigma, &mut rng)?;
                jobs.push((idx, noise));
            }
            let model_ref = &model;
            let init = || (model_ref.with_noise(None).zero_gradients(), LossTerms::default(), None::<Error>);
            let (mut grads, batch_terms, err) = chunked_reduce(
                &jobs,
                GRAD_CHUNK,
                init,
                |acc, (idx, noise)| {
                    if acc.2.is_some() {
                        return;
                    }
                    let noise = (sigma > 0.0).then_some(noise.as_slice());
                    let view = model_ref.with_noise(noise);
                    match composite_loss_into(&view, dataset.windows[*idx].values(), &config.loss, &mut acc.0) {
                        Ok(t) => add_terms(&mut acc.1, &t),
                        Err(e) => acc.2 = Some(e),
                    }
                },
                |total, part| {
                    total.0.add_scaled(&part.0, 1.0);
                    add_terms(&mut total.1, &part.1);
                    if total.2.is_none() {
                        total.2 = part.2;
                    }
                },
            );
            if let Some(e) = err {
                return Err(Error::NonFinite(format!("epoch {epoch}, step {step}: {e}")));
            }
            if !batch_terms.total.is_finite() {
                return Err(Error::NonFinite(format!("epoch {epoch}, step {step}: loss {}", batch_terms.total)));
            }
            add_terms(&mut sums, &batch_terms);
            grads.scale(1.0 / batch.len() as f64);
            apply(&mut model, &mut enc_state, &mut dec_state, &grads)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, step {step}: {e}")))?;
        }
        let n = dataset.len() as f64;
        let log = EpochLog {
            epoch,
            sigma,
            mse: sums.mse / n,
            dtw: sums.dtw / n,
            fgsm: sums.fgsm / n,
            total: sums.total / n,
        };
        for net in [model.encoder(), model.decoder()] {
            if let Some(name) = net.params().first_non_finite() {
                return Err(Error::NonFinite(format!("epoch {epoch}: parameter {name}")));
            }
        }
        log::debug!(
            "epoch {epoch}: sigma {sigma:.4} mse {:.3e} dtw {:.4} fgsm {:.3e}",
            log.mse,
            log.dtw,
            log.fgsm
        );
        progress(&log);
        logs.push(log);
    }
    model.metadata = Some(TrainingMetadata {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        seed: config.seed,
        schedule,
        loss: config.loss,
        final_sigma: schedule.sigma(config.epochs - 1),
        training_windows: dataset.len(),
    });
    Ok((model, logs))
}

fn add_terms(acc: &mut LossTerms, t: &LossTerms) {
    acc.mse += t.mse;
    acc.dtw += t.dtw;
    acc.fgsm += t.fgsm;
    acc.total += t.total;
}

fn apply(model: &mut AutoencoderModel, enc: &mut AdamState, dec: &mut AdamState, grads: &Gradients) -> Result<()> {
    let (encoder, decoder) = model.networks_mut();
    enc.step(encoder.params_mut(), &grads.0[0])?;
    dec.step(decoder.params_mut(), &grads.0[1])
}
