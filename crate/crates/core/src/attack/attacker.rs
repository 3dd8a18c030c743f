use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureVector, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::nn::{chunked_reduce, Activation, AdamConfig, AdamState, Mlp, MlpShape, ParameterSet};
use crate::signal::GazeSignal;

const GRAD_CHUNK: usize = 32;

/// A unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `v` to unit length.
    pub fn normalize(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::domain(format!("cannot normalize a vector of norm {norm}")));
        }
        Ok(Self(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Cosine similarity, clamped to [-1, 1] against rounding.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        let d: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        d.clamp(-1.0, 1.0)
    }

    /// Unit-normalized mean of several embeddings.
    pub fn mean<'a, I: IntoIterator<Item = &'a Embedding>>(items: I) -> Result<Self> {
        let mut acc: Option<Vec<f64>> = None;
        for e in items {
            match acc.as_mut() {
                None => acc = Some(e.0.clone()),
                Some(a) => {
                    if a.len() != e.0.len() {
                        return Err(Error::shape("embedding mean", &[a.len()], &[e.0.len()]));
                    }
                    a.iter_mut().zip(&e.0).for_each(|(s, x)| *s += x);
                }
            }
        }
        Self::normalize(acc.ok_or_else(|| Error::domain("mean of zero embeddings"))?)
    }
}

/// Per-feature z-normalization fitted on the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl FeatureScaler {
    pub fn fit(samples: &[FeatureVector]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("cannot fit a feature scaler on zero samples"));
        }
        let n = samples.len() as f64;
        let mut mean = [0.0; FEATURE_DIM];
        let mut std = [0.0; FEATURE_DIM];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.0) {
                *m += v / n;
            }
        }
        for s in samples {
            for ((sd, m), v) in std.iter_mut().zip(mean).zip(s.0) {
                *sd += (v - m).powi(2) / n;
            }
        }
        for sd in std.iter_mut() {
            *sd = if *sd > 1e-16 { sd.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, f: &FeatureVector) -> Vec<f64> {
        (0..FEATURE_DIM).map(|k| (f.0[k] - self.mean[k]) / self.std[k]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackerConfig {
    pub hidden_dim: usize,
    pub embedding_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Multiplier applied to the classifier logits of the unit embedding.
    pub logit_scale: f64,
}

impl Default for AttackerConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            embedding_dim: 16,
            epochs: 200,
            learning_rate: 3e-3,
            batch_size: 32,
            logit_scale: 5.0,
        }
    }
}

impl AttackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.embedding_dim == 0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::domain("attacker dimensions, batch size and epochs must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain(format!("attacker learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.logit_scale > 0.0 && self.logit_scale.is_finite()) {
            return Err(Error::domain(format!("logit scale must be positive, got {}", self.logit_scale)));
        }
        Ok(())
    }
}

/// A trained re-identification network.
///
/// Only the embedder is used for enrollment and scoring; the classifier head
/// is kept so that training accuracy can be inspected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attacker {
    pub config: AttackerConfig,
    pub scaler: FeatureScaler,
    embedder: Mlp,
    head: Mlp,
    subjects: Vec<u32>,
}

struct Pass {
    embedder_tape: crate::nn::Tape,
    head_tape: crate::nn::Tape,
    unit: Vec<f64>,
    norm: f64,
    logits: Vec<f64>,
}

impl Attacker {
    fn new<R: rand::Rng>(config: AttackerConfig, scaler: FeatureScaler, subjects: Vec<u32>, rng: &mut R) -> Result<Self> {
        let embedder = Mlp::glorot(
            MlpShape::new(
                vec![FEATURE_DIM, config.hidden_dim, config.embedding_dim],
                vec![Activation::Elu, Activation::Tanh],
            )?,
            "embedder",
            rng,
        );
        let head = Mlp::glorot(
            MlpShape::new(vec![config.embedding_dim, subjects.len()], vec![Activation::Identity])?,
            "head",
            rng,
        );
        Ok(Self {
            config,
            scaler,
            embedder,
            head,
            subjects,
        })
    }

    /// Checks internal consistency, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.embedder.validate()?;
        self.head.validate()?;
        let e = self.embedder.shape();
        let h = self.head.shape();
        if e.input_dim() != FEATURE_DIM || h.input_dim() != e.output_dim() || h.output_dim() != self.subjects.len() {
            return Err(Error::shape(
                "attacker",
                &[FEATURE_DIM, e.output_dim(), self.subjects.len()],
                &[e.input_dim(), h.input_dim(), h.output_dim()],
            ));
        }
        if self.scaler.std.iter().chain(&self.scaler.mean).any(|v| !v.is_finite()) || self.scaler.std.iter().any(|v| *v <= 0.0) {
            return Err(Error::NonFinite("attacker feature scaler".into()));
        }
        Ok(())
    }

    /// Subject ids seen in training, in classifier order.
    pub fn subjects(&self) -> &[u32] {
        &self.subjects
    }

    pub fn embedder(&self) -> &Mlp {
        &self.embedder
    }

    pub fn head(&self) -> &Mlp {
        &self.head
    }

    pub fn embed(&self, features: &FeatureVector) -> Result<Embedding> {
        let u = self.embedder.forward(&self.scaler.transform(features))?;
        Embedding::normalize(u)
    }

    /// Unit-normalized mean embedding of a recording's feature vectors, or
    /// `None` when the recording yields no feature vector.
    pub fn embed_recording(&self, signal: &GazeSignal) -> Result<Option<Embedding>> {
        let feats = extract_features(signal);
        if feats.is_empty() {
            return Ok(None);
        }
        let embs = feats.iter().map(|f| self.embed(f)).collect::<Result<Vec<_>>>()?;
        Embedding::mean(&embs).map(Some)
    }

    /// Embeds many labeled recordings in parallel.
    pub fn embed_recordings(&self, recordings: &[(u32, &GazeSignal)]) -> Result<Vec<(u32, Option<Embedding>)>> {
        recordings
            .par_iter()
            .map(|(s, sig)| Ok((*s, self.embed_recording(sig)?)))
            .collect()
    }

    /// Predicted training subject for one feature vector.
    pub fn classify(&self, features: &FeatureVector) -> Result<u32> {
        let pass = self.forward(features)?;
        let best = argmax(&pass.logits);
        Ok(self.subjects[best])
    }

    /// Fraction of labeled feature vectors classified correctly.
    pub fn accuracy(&self, samples: &[(u32, FeatureVector)]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::domain("accuracy of zero samples"));
        }
        let mut correct = 0usize;
        for (s, f) in samples {
            if self.classify(f)? == *s {
                correct += 1;
            }
        }
        Ok(correct as f64 / samples.len() as f64)
    }

    fn forward(&self, features: &FeatureVector) -> Result<Pass> {
        let (u, embedder_tape) = self.embedder.forward_recorded(&self.scaler.transform(features))?;
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let unit: Vec<f64> = u.iter().map(|x| x / norm).collect();
        let (h, head_tape) = self.head.forward_recorded(&unit)?;
        let logits = h.iter().map(|v| v * self.config.logit_scale).collect();
        Ok(Pass {
            embedder_tape,
            head_tape,
            unit,
            norm,
            logits,
        })
    }

    fn zero_grads(&self) -> [ParameterSet; 2] {
        [self.embedder.params().zeros_like(), self.head.params().zeros_like()]
    }

    /// Cross-entropy of one labeled sample, accumulating parameter gradients.
    fn sample_loss(&self, class: usize, features: &FeatureVector, grads: &mut [ParameterSet; 2]) -> Result<f64> {
        let pass = self.forward(features)?;
        let probs = softmax(&pass.logits);
        let loss = -probs[class].max(1e-300).ln();
        let s = self.config.logit_scale;
        let grad_h: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(k, p)| s * (p - if k == class { 1.0 } else { 0.0 }))
            .collect();
        let [ge, gh] = grads;
        let grad_e = self.head.backward(&pass.head_tape, &grad_h, gh);
        let proj: f64 = pass.unit.iter().zip(&grad_e).map(|(e, g)| e * g).sum();
        let grad_u: Vec<f64> = grad_e
            .iter()
            .zip(&pass.unit)
            .map(|(g, e)| (g - e * proj) / pass.norm)
            .collect();
        self.embedder.backward(&pass.embedder_tape, &grad_u, ge);
        Ok(loss)
    }

    /// Mean cross-entropy and its gradients over labeled samples given as
    /// (classifier index, features).
    pub(crate) fn batch_loss(&self, batch: &[(usize, FeatureVector)]) -> Result<(f64, [ParameterSet; 2])> {
        let (loss, mut grads, err) = chunked_reduce(
            batch,
            GRAD_CHUNK,
            || (0.0, self.zero_grads(), None::<Error>),
            |acc, (c, f)| {
                if acc.2.is_some() {
                    return;
                }
                match self.sample_loss(*c, f, &mut acc.1) {
                    Ok(l) => acc.0 += l,
                    Err(e) => acc.2 = Some(e),
                }
            },
            |total, part| {
                total.0 += part.0;
                total.1[0].add_scaled(&part.1[0], 1.0);
                total.1[1].add_scaled(&part.1[1], 1.0);
                if total.2.is_none() {
                    total.2 = part.2;
                }
            },
        );
        if let Some(e) = err {
            return Err(e);
        }
        let n = batch.len().max(1) as f64;
        grads[0].scale(1.0 / n);
        grads[1].scale(1.0 / n);
        Ok((loss / n, grads))
    }

    pub(crate) fn params_mut(&mut self) -> (&mut ParameterSet, &mut ParameterSet) {
        (self.embedder.params_mut(), self.head.params_mut())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-epoch record of attacker training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackerEpoch {
    pub epoch: usize,
    pub loss: f64,
}

/// Trains an attacker on labeled recordings.
pub fn train_attacker(recordings: &[(u32, &GazeSignal)], config: &AttackerConfig, seed: u64) -> Result<(Attacker, Vec<AttackerEpoch>)> {
    let per_recording: Vec<(u32, Vec<FeatureVector>)> = recordings
        .par_iter()
        .map(|(s, sig)| (*s, extract_features(sig)))
        .collect();
    let samples: Vec<(u32, FeatureVector)> = per_recording
        .into_iter()
        .flat_map(|(s, fs)| fs.into_iter().map(move |f| (s, f)))
        .collect();
    train_attacker_on_features(&samples, config, seed)
}

/// Trains an attacker directly on labeled feature vectors.
pub fn train_attacker_on_features(
    samples: &[(u32, FeatureVector)],
    config: &AttackerConfig,
    seed: u64,
) -> Result<(Attacker, Vec<AttackerEpoch>)> {
    config.validate()?;
    let mut subjects: Vec<u32> = samples.iter().map(|(s, _)| *s).collect();
    subjects.sort_unstable();
    subjects.dedup();
    if subjects.len() < 2 {
        return Err(Error::domain(format!(
            "attacker training needs at least 2 subjects with features, got {}",
            subjects.len()
        )));
    }
    if let Some((s, _)) = samples.iter().find(|(_, f)| f.0.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("feature vector of subject {s}")));
    }
    let feats: Vec<FeatureVector> = samples.iter().map(|(_, f)| *f).collect();
    let scaler = FeatureScaler::fit(&feats)?;
    let indexed: Vec<(usize, FeatureVector)> = samples
        .iter()
        .map(|(s, f)| (subjects.binary_search(s).unwrap(), *f))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attacker = Attacker::new(*config, scaler, subjects, &mut rng)?;
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut emb_state = AdamState::new(attacker.embedder.params(), adam);
    let mut head_state = AdamState::new(attacker.head.params(), adam);

    let mut order: Vec<usize> = (0..indexed.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<(usize, FeatureVector)> = idx.iter().map(|&i| indexed[i]).collect();
            let (loss, grads) = attacker
                .batch_loss(&batch)
                .map_err(|e| Error::NonFinite(format!("attacker epoch {epoch}: {e}")))?;
            total += loss * batch.len() as f64;
            let (pe, ph) = attacker.params_mut();
            emb_state.step(pe, &grads[0])?;
            head_state.step(ph, &grads[1])?;
        }
        let loss = total / indexed.len() as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("attacker epoch {epoch}: loss {loss}")));
        }
        log.push(AttackerEpoch { epoch, loss });
    }
    log::debug!(
        "attacker trained on {} vectors of {} subjects, final loss {:.4}",
        indexed.len(),
        attacker.subjects.len(),
        log.last().map(|l| l.loss).unwrap_or(f64::NAN)
    );
    Ok((attacker, log))
}
