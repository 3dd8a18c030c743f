use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{chunked_reduce, Activation, AdamConfig, AdamState, LstmCell, LstmState, Mlp, MlpShape, ParameterSet};
use crate::signal::GazeSignal;

/// Inputs per time step: position relative to the newest sample and the
/// first-difference velocity.
pub const PREDICTOR_INPUT_DIM: usize = 4;

/// Degrees per unit of the relative-position inputs and the displacement
/// output.
const POSITION_SCALE: f64 = 5.0;
/// Degrees per sample per unit of the velocity inputs.
const VELOCITY_SCALE: f64 = 1.0;

const GRAD_CHUNK: usize = 16;

/// Number of samples covered by a horizon in milliseconds.
pub fn horizon_samples(horizon_ms: f64, sample_rate: f64) -> Result<usize> {
    let h = (horizon_ms * sample_rate / 1000.0).round();
    if !(h >= 1.0 && h.is_finite()) {
        return Err(Error::domain(format!(
            "horizon of {horizon_ms} ms at {sample_rate} Hz is shorter than one sample"
        )));
    }
    Ok(h as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub history: usize,
    pub horizon_ms: f64,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Spacing between consecutive training segments, in samples.
    pub train_stride: usize,
    /// Spacing between consecutive evaluated segments, in samples.
    pub eval_stride: usize,
    /// Upper bound on training segments; a seeded subset is drawn when more
    /// are available.
    pub max_train_segments: usize,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            history: 25,
            horizon_ms: 60.0,
            hidden_dim: 32,
            epochs: 10,
            learning_rate: 2e-3,
            batch_size: 64,
            train_stride: 10,
            eval_stride: 10,
            max_train_segments: 12_000,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history < 2 {
            return Err(Error::domain("predictor history must be at least 2 samples"));
        }
        if self.hidden_dim == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::domain("predictor hidden size, epochs and batch size must be positive"));
        }
        if self.train_stride == 0 || self.eval_stride == 0 || self.max_train_segments == 0 {
            return Err(Error::domain("predictor strides and segment cap must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain(format!("predictor learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.horizon_ms > 0.0 && self.horizon_ms.is_finite()) {
            return Err(Error::domain(format!("horizon must be positive, got {} ms", self.horizon_ms)));
        }
        Ok(())
    }
}

/// A history segment and the true position `horizon` samples after its
/// newest sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub history: Vec<(f64, f64)>,
    pub target: (f64, f64),
}

/// Fully valid segments of a recording whose newest sample advances by
/// `stride`.
pub fn segments(signal: &GazeSignal, history: usize, horizon: usize, stride: usize) -> Vec<Segment> {
    let mut out = Vec::new();
    if history == 0 || stride == 0 || signal.len() < history + horizon {
        return out;
    }
    let mut last = history - 1;
    while last + horizon < signal.len() {
        let hist: Option<Vec<(f64, f64)>> = (last + 1 - history..=last).map(|k| signal.position(k)).collect();
        if let (Some(history), Some(target)) = (hist, signal.position(last + horizon)) {
            out.push(Segment { history, target });
        }
        last += stride;
    }
    out
}

/// Recurrent gaze forecaster predicting displacement at a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    pub history: usize,
    pub horizon: usize,
    pub sample_rate: f64,
    cell: LstmCell,
    head: Mlp,
}

impl PredictorModel {
    pub fn new<R: rand::Rng>(history: usize, horizon: usize, sample_rate: f64, hidden_dim: usize, rng: &mut R) -> Result<Self> {
        let cell = LstmCell::glorot(PREDICTOR_INPUT_DIM, hidden_dim, "lstm", rng);
        let head = Mlp::zeros(MlpShape::new(vec![hidden_dim, 2], vec![Activation::Identity])?, "head");
        Ok(Self {
            history,
            horizon,
            sample_rate,
            cell,
            head,
        })
    }

    /// Checks internal consistency, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        self.head.validate()?;
        let h = self.head.shape();
        if self.cell.input_dim() != PREDICTOR_INPUT_DIM || h.input_dim() != self.cell.hidden_dim() || h.output_dim() != 2 {
            return Err(Error::shape(
                "predictor",
                &[PREDICTOR_INPUT_DIM, self.cell.hidden_dim(), 2],
                &[self.cell.input_dim(), h.input_dim(), h.output_dim()],
            ));
        }
        if self.history < 2 || self.horizon == 0 || !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::domain("predictor history, horizon or sample rate out of range"));
        }
        Ok(())
    }

    pub fn cell(&self) -> &LstmCell {
        &self.cell
    }

    pub fn head(&self) -> &Mlp {
        &self.head
    }

    pub(crate) fn params_mut(&mut self) -> (&mut ParameterSet, &mut ParameterSet) {
        (self.cell.params_mut(), self.head.params_mut())
    }

    fn inputs(&self, history: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
        if history.len() != self.history {
            return Err(Error::shape("predictor history", &[self.history], &[history.len()]));
        }
        if history.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(Error::domain("predictor history contains an invalid sample"));
        }
        let (lx, ly) = history[history.len() - 1];
        Ok(history
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| {
                let (px, py) = if k == 0 { (x, y) } else { history[k - 1] };
                vec![
                    (x - lx) / POSITION_SCALE,
                    (y - ly) / POSITION_SCALE,
                    (x - px) / VELOCITY_SCALE,
                    (y - py) / VELOCITY_SCALE,
                ]
            })
            .collect())
    }

    /// Predicted displacement (degrees) from the newest history sample.
    pub fn displacement(&self, history: &[(f64, f64)]) -> Result<(f64, f64)> {
        let inputs = self.inputs(history)?;
        let (states, _) = self.cell.forward_sequence(&LstmState::zeros(self.cell.hidden_dim()), &inputs)?;
        let out = self.head.forward(&states.last().expect("non-empty history").h)?;
        Ok((out[0] * POSITION_SCALE, out[1] * POSITION_SCALE))
    }

    /// Predicted absolute position at the horizon.
    pub fn predict(&self, history: &[(f64, f64)]) -> Result<(f64, f64)> {
        let (dx, dy) = self.displacement(history)?;
        let (lx, ly) = history[history.len() - 1];
        let p = (lx + dx, ly + dy);
        if !(p.0.is_finite() && p.1.is_finite()) {
            return Err(Error::NonFinite("predictor output".into()));
        }
        Ok(p)
    }

    /// Squared error of the scaled displacement, halved over both channels,
    /// accumulating gradients.
    fn segment_loss(&self, seg: &Segment, grads: &mut [ParameterSet; 2]) -> Result<f64> {
        let inputs = self.inputs(&seg.history)?;
        let (states, tape) = self.cell.forward_sequence(&LstmState::zeros(self.cell.hidden_dim()), &inputs)?;
        let h = &states.last().expect("non-empty history").h;
        let (out, head_tape) = self.head.forward_recorded(h)?;
        let (lx, ly) = seg.history[seg.history.len() - 1];
        let target = [(seg.target.0 - lx) / POSITION_SCALE, (seg.target.1 - ly) / POSITION_SCALE];
        let diff = [out[0] - target[0], out[1] - target[1]];
        let loss = (diff[0] * diff[0] + diff[1] * diff[1]) / 2.0;
        let [gc, gh] = grads;
        let grad_h = self.head.backward(&head_tape, &diff, gh);
        let mut grad_steps = vec![vec![0.0; self.cell.hidden_dim()]; inputs.len()];
        *grad_steps.last_mut().unwrap() = grad_h;
        self.cell.backward_sequence(&tape, &grad_steps, gc);
        Ok(loss)
    }

    pub(crate) fn batch_loss(&self, batch: &[&Segment]) -> Result<(f64, [ParameterSet; 2])> {
        let zero = || [self.cell.params().zeros_like(), self.head.params().zeros_like()];
        let (loss, mut grads, err) = chunked_reduce(
            batch,
            GRAD_CHUNK,
            || (0.0, zero(), None::<Error>),
            |acc, seg| {
                if acc.2.is_some() {
                    return;
                }
                match self.segment_loss(seg, &mut acc.1) {
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
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorEpoch {
    pub epoch: usize,
    pub loss: f64,
}

/// Trains a predictor on the fully valid segments of the recordings.
pub fn train_predictor(recordings: &[&GazeSignal], config: &PredictorConfig, seed: u64) -> Result<(PredictorModel, Vec<PredictorEpoch>)> {
    config.validate()?;
    let rate = recordings
        .first()
        .ok_or_else(|| Error::domain("predictor training needs at least one recording"))?
        .sample_rate();
    if let Some(r) = recordings.iter().find(|r| (r.sample_rate() - rate).abs() > 1e-9 * rate) {
        return Err(Error::domain(format!(
            "predictor recordings mix sample rates {rate} and {} Hz",
            r.sample_rate()
        )));
    }
    let horizon = horizon_samples(config.horizon_ms, rate)?;
    let per: Vec<Vec<Segment>> = recordings
        .par_iter()
        .map(|r| segments(r, config.history, horizon, config.train_stride))
        .collect();
    let mut all: Vec<Segment> = per.into_iter().flatten().collect();
    if all.len() < config.batch_size.min(8) {
        return Err(Error::domain(format!("only {} valid training segments for the predictor", all.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if all.len() > config.max_train_segments {
        all.shuffle(&mut rng);
        all.truncate(config.max_train_segments);
    }
    let mut model = PredictorModel::new(config.history, horizon, rate, config.hidden_dim, &mut rng)?;
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut cell_state = AdamState::new(model.cell.params(), adam);
    let mut head_state = AdamState::new(model.head.params(), adam);
    let mut order: Vec<usize> = (0..all.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<&Segment> = idx.iter().map(|&i| &all[i]).collect();
            let (loss, grads) = model
                .batch_loss(&batch)
                .map_err(|e| Error::NonFinite(format!("predictor epoch {epoch}: {e}")))?;
            total += loss * batch.len() as f64;
            let (pc, ph) = model.params_mut();
            cell_state.step(pc, &grads[0])?;
            head_state.step(ph, &grads[1])?;
        }
        let loss = total / all.len() as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("predictor epoch {epoch}: loss {loss}")));
        }
        log::debug!("predictor epoch {epoch}: loss {loss:.5}");
        log.push(PredictorEpoch { epoch, loss });
    }
    Ok((model, log))
}
