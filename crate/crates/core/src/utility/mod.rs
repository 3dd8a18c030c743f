//! Utility of privatized signals: positional error against the original and
//! short-horizon gaze prediction.

mod predictor;

pub use predictor::{
    horizon_samples, segments, train_predictor, PredictorConfig, PredictorEpoch, PredictorModel, Segment,
    PREDICTOR_INPUT_DIM,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::GazeSignal;

/// Mean squared positional difference in deg², averaged over both channels
/// of the samples valid in both signals.
pub fn signal_mse(raw: &GazeSignal, privatized: &GazeSignal) -> Result<f64> {
    if raw.len() != privatized.len() {
        return Err(Error::domain(format!(
            "signal lengths differ: {} vs {}",
            raw.len(),
            privatized.len()
        )));
    }
    if raw.timestamps() != privatized.timestamps() {
        return Err(Error::domain("signals have different timestamps"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for k in 0..raw.len() {
        if let (Some(a), Some(b)) = (raw.position(k), privatized.position(k)) {
            sum += (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::domain("no sample is valid in both signals"));
    }
    Ok(sum / (2 * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub error: f64,
    pub fraction: f64,
}

/// Empirical cumulative distribution of prediction errors (degrees).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorCdf {
    pub points: Vec<CdfPoint>,
}

impl ErrorCdf {
    pub fn from_errors(mut errors: Vec<f64>) -> Result<Self> {
        if errors.iter().any(|e| e.is_nan()) {
            return Err(Error::NonFinite("prediction error".into()));
        }
        errors.sort_by(f64::total_cmp);
        let n = errors.len() as f64;
        let points = errors
            .into_iter()
            .enumerate()
            .map(|(i, error)| CdfPoint {
                error,
                fraction: (i + 1) as f64 / n,
            })
            .collect();
        Ok(Self { points })
    }

    /// Fraction of errors at or below `error`.
    pub fn fraction_at(&self, error: f64) -> f64 {
        let k = self.points.partition_point(|p| p.error <= error);
        if k == 0 {
            0.0
        } else {
            self.points[k - 1].fraction
        }
    }
}

/// How a future position is forecast.
#[derive(Debug, Clone, Copy)]
pub enum Forecaster<'a> {
    Model(&'a PredictorModel),
    /// Zero-displacement reference: the prediction is the newest sample.
    LastPosition { history: usize, horizon: usize },
}

impl Forecaster<'_> {
    fn history(&self) -> usize {
        match self {
            Forecaster::Model(m) => m.history,
            Forecaster::LastPosition { history, .. } => *history,
        }
    }

    fn horizon(&self) -> usize {
        match self {
            Forecaster::Model(m) => m.horizon,
            Forecaster::LastPosition { horizon, .. } => *horizon,
        }
    }

    pub fn predict(&self, history: &[(f64, f64)]) -> Result<(f64, f64)> {
        match self {
            Forecaster::Model(m) => m.predict(history),
            Forecaster::LastPosition { .. } => history
                .last()
                .copied()
                .ok_or_else(|| Error::domain("empty prediction history")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionErrors {
    pub cdf: ErrorCdf,
    /// `None` when no admissible segment exists.
    pub mean: Option<f64>,
    pub count: usize,
}

/// Euclidean forecast error over every fully valid segment whose target is
/// valid, taking a segment every `stride` samples.
pub fn prediction_error_cdf(forecaster: Forecaster<'_>, recordings: &[&GazeSignal], stride: usize) -> Result<PredictionErrors> {
    let per: Vec<Vec<f64>> = recordings
        .par_iter()
        .map(|r| {
            segments(r, forecaster.history(), forecaster.horizon(), stride)
                .iter()
                .map(|s| {
                    let p = forecaster.predict(&s.history)?;
                    Ok(((p.0 - s.target.0).powi(2) + (p.1 - s.target.1).powi(2)).sqrt())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = per.into_iter().flatten().collect();
    let count = errors.len();
    let mean = (count > 0).then(|| errors.iter().sum::<f64>() / count as f64);
    Ok(PredictionErrors {
        cdf: ErrorCdf::from_errors(errors)?,
        mean,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(x: Vec<f64>, y: Vec<f64>) -> GazeSignal {
        GazeSignal::uniform(0.0, x, y, 250.0).unwrap()
    }

    #[test]
    fn mse_examples() {
        let a = sig(vec![0.0, 1.0, 2.0], vec![3.0, 4.0, 5.0]);
        assert_eq!(signal_mse(&a, &a).unwrap(), 0.0);
        let b = sig(vec![1.0, 2.0, 3.0], vec![3.0, 4.0, 5.0]);
        assert_eq!(signal_mse(&a, &b).unwrap(), 0.5);
        let n = sig(vec![f64::NAN; 3], vec![0.0; 3]);
        assert!(signal_mse(&a, &n).is_err());
        assert!(signal_mse(&a, &sig(vec![0.0; 2], vec![0.0; 2])).is_err());
    }

    #[test]
    fn mse_ignores_samples_invalid_in_either() {
        let a = sig(vec![0.0, f64::NAN, 0.0], vec![0.0, 0.0, 0.0]);
        let b = sig(vec![2.0, 7.0, 2.0], vec![0.0, 0.0, f64::NAN]);
        assert_eq!(signal_mse(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn cdf_is_monotone_and_complete() {
        let c = ErrorCdf::from_errors(vec![0.3, 0.1, 0.2, 0.2]).unwrap();
        assert_eq!(c.points.last().unwrap().fraction, 1.0);
        assert!(c.points.windows(2).all(|w| w[0].error <= w[1].error && w[0].fraction <= w[1].fraction));
        assert_eq!(c.fraction_at(0.2), 0.75);
        assert_eq!(c.fraction_at(0.0), 0.0);
    }

    #[test]
    fn baseline_on_constant_signal_is_exact() {
        let s = sig(vec![2.0; 100], vec![-1.0; 100]);
        let e = prediction_error_cdf(Forecaster::LastPosition { history: 25, horizon: 15 }, &[&s], 1).unwrap();
        assert_eq!(e.count, 100 - 25 - 15 + 1);
        assert_eq!(e.mean, Some(0.0));
        assert!(e.cdf.points.iter().all(|p| p.error == 0.0));
    }
}
