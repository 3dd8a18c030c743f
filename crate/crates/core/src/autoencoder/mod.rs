//! The latent-noise autoencoder: model, training and privatization.

mod model;
mod train;

pub use model::{
    inject_noise, inject_noise_in_place, Architecture, AutoencoderModel, NoiseSchedule, NoisedAutoencoder, PrivacyLevel,
    TrainingMetadata, LATENT_DIM,
};
pub use train::{train, train_with_progress, EpochLog, TrainConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::{reassemble, window_split, GazeSignal};

/// Outcome of privatizing one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Privatized {
    pub signal: GazeSignal,
    /// Windows without any valid sample, copied unchanged.
    pub bypassed_windows: usize,
    /// Invalid samples interpolated from their neighbors to form encoder
    /// input. They remain invalid in the output.
    pub filled_samples: usize,
    /// Samples copied unchanged because the recording is shorter than one
    /// window.
    pub passthrough_tail: std::ops::Range<usize>,
}

/// Fills invalid samples of an interleaved window by linear interpolation
/// between the nearest valid neighbors, holding the edge values. Returns
/// `None` when no sample is valid.
fn fill_gaps(values: &[f64], valid: &[bool]) -> Option<Vec<f64>> {
    let known: Vec<usize> = (0..valid.len()).filter(|&i| valid[i]).collect();
    let (&first, &last) = (known.first()?, known.last()?);
    let mut out = values.to_vec();
    let mut next = 0;
    for i in 0..valid.len() {
        if valid[i] {
            continue;
        }
        while next < known.len() && known[next] < i {
            next += 1;
        }
        for c in 0..2 {
            out[2 * i + c] = if i < first {
                values[2 * first + c]
            } else if i > last {
                values[2 * last + c]
            } else {
                let (a, b) = (known[next - 1], known[next]);
                let t = (i - a) as f64 / (b - a) as f64;
                values[2 * a + c] + t * (values[2 * b + c] - values[2 * a + c])
            };
        }
    }
    Some(out)
}

/// Runs a whole recording through encode → noise → decode.
///
/// Invalid samples stay invalid; gaps inside a window are interpolated only
/// to feed the encoder. Samples after the last full window are taken from an
/// extra window aligned with the end of the recording. The output has the
/// input's length and timestamps.
pub fn privatize(model: &AutoencoderModel, signal: &GazeSignal, level: &PrivacyLevel, seed: u64) -> Result<Privatized> {
    level.validate()?;
    let len = model.window_len();
    if signal.len() < len {
        return Ok(Privatized {
            signal: signal.clone(),
            bypassed_windows: 0,
            filled_samples: 0,
            passthrough_tail: 0..signal.len(),
        });
    }
    let mut batch = window_split(signal, "privatize", len, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = |values: &[f64], valid: &[bool]| -> Result<Option<Vec<f64>>> {
        let Some(input) = fill_gaps(values, valid) else {
            return Ok(None);
        };
        let mut latent = model.encode(&input)?;
        inject_noise_in_place(&mut latent, level.sigma, &mut rng)?;
        let out = model.decode(&latent)?;
        if let Some(v) = out.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("decoder output {v}")));
        }
        Ok(Some(out))
    };

    let mut bypassed = 0;
    let mut filled = 0;
    for w in batch.windows.iter_mut() {
        match run(w.values(), w.valid())? {
            Some(out) => {
                filled += w.valid().iter().filter(|v| !**v).count();
                *w = w.with_values(out)?;
            }
            None => bypassed += 1,
        }
    }

    let layout = batch.layout.as_mut().expect("window_split records its layout");
    let tail_len = layout.tail.valid.len();
    let n = signal.len();
    if tail_len > 0 {
        let head = len - tail_len;
        let source = window_split(&signal.slice(n - len..n), "tail", len, false)?;
        let w = &source.windows[0];
        if let Some(out) = run(w.values(), w.valid())? {
            filled += w.valid()[head..].iter().filter(|v| !**v).count();
            for (k, ok) in layout.tail.valid.iter().enumerate() {
                if *ok {
                    layout.tail.values[k] = [out[2 * (head + k)], out[2 * (head + k) + 1]];
                }
            }
        }
    }
    let r = reassemble(&batch)?;
    Ok(Privatized {
        signal: r.signal,
        bypassed_windows: bypassed,
        filled_samples: filled,
        passthrough_tail: n..n,
    })
}
