//! Statistical eye-movement descriptors over fixed-length subsequences.

use serde::{Deserialize, Serialize};

use crate::signal::GazeSignal;

pub const FEATURE_DIM: usize = 14;

/// Subsequence length used for one feature vector.
pub const SUBSEQUENCE_S: f64 = 5.0;

/// Angular speed separating saccadic from fixational samples (I-VT).
pub const SACCADE_VELOCITY_DEG_S: f64 = 30.0;

/// Names in storage order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "vx_mean",
    "vx_std",
    "vx_skew",
    "vx_kurtosis",
    "vy_mean",
    "vy_std",
    "vy_skew",
    "vy_kurtosis",
    "speed_mean",
    "speed_std",
    "fixation_rate",
    "saccade_rate",
    "saccade_amplitude_mean",
    "fixation_dispersion_mean",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

/// First four moments; skewness and excess kurtosis are 0 for a constant
/// sample.
fn moments(v: &[f64]) -> [f64; 4] {
    if v.is_empty() {
        return [0.0; 4];
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in v {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    if std < 1e-12 {
        return [mean, 0.0, 0.0, 0.0];
    }
    [mean, std, m3 / (std * std * std), m4 / (m2 * m2) - 3.0]
}

#[derive(Clone, Copy, PartialEq)]
enum Label {
    Fixation,
    Saccade,
}

fn features_of(signal: &GazeSignal, range: std::ops::Range<usize>) -> FeatureVector {
    let rate = signal.sample_rate();
    let span_s = range.len() as f64 / rate;
    let mut vx = Vec::with_capacity(range.len());
    let mut vy = Vec::with_capacity(range.len());
    let mut speed = Vec::with_capacity(range.len());

    let mut fixations = 0usize;
    let mut saccades = 0usize;
    let mut amplitudes = Vec::new();
    let mut dispersions = Vec::new();

    // current event: label, first sample index, last sample index
    let mut current: Option<(Label, usize, usize)> = None;
    let mut close = |ev: (Label, usize, usize)| {
        let (label, a, b) = ev;
        match label {
            Label::Saccade => {
                saccades += 1;
                let (x0, y0) = signal.position(a).unwrap();
                let (x1, y1) = signal.position(b).unwrap();
                amplitudes.push(((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt());
            }
            Label::Fixation => {
                fixations += 1;
                let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
                for k in a..=b {
                    let (x, y) = signal.position(k).unwrap();
                    xmin = xmin.min(x);
                    xmax = xmax.max(x);
                    ymin = ymin.min(y);
                    ymax = ymax.max(y);
                }
                dispersions.push((xmax - xmin) + (ymax - ymin));
            }
        }
    };

    for k in range.start..range.end.saturating_sub(1) {
        let (Some((x0, y0)), Some((x1, y1))) = (signal.position(k), signal.position(k + 1)) else {
            if let Some(ev) = current.take() {
                close(ev);
            }
            continue;
        };
        let (dx, dy) = ((x1 - x0) * rate, (y1 - y0) * rate);
        let s = (dx * dx + dy * dy).sqrt();
        vx.push(dx);
        vy.push(dy);
        speed.push(s);
        let label = if s > SACCADE_VELOCITY_DEG_S {
            Label::Saccade
        } else {
            Label::Fixation
        };
        current = match current {
            Some((l, a, _)) if l == label => Some((l, a, k + 1)),
            Some(ev) => {
                close(ev);
                Some((label, k, k + 1))
            }
            None => Some((label, k, k + 1)),
        };
    }
    if let Some(ev) = current.take() {
        close(ev);
    }

    let mx = moments(&vx);
    let my = moments(&vy);
    let ms = moments(&speed);
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    FeatureVector([
        mx[0],
        mx[1],
        mx[2],
        mx[3],
        my[0],
        my[1],
        my[2],
        my[3],
        ms[0],
        ms[1],
        fixations as f64 / span_s,
        saccades as f64 / span_s,
        mean(&amplitudes),
        mean(&dispersions),
    ])
}

/// One feature vector per non-overlapping five-second subsequence.
///
/// Subsequences with more than half of their samples invalid are skipped,
/// and invalid samples never enter the statistics.
pub fn extract_features(signal: &GazeSignal) -> Vec<FeatureVector> {
    let len = (SUBSEQUENCE_S * signal.sample_rate()).round() as usize;
    if len < 2 {
        return Vec::new();
    }
    (0..signal.len() / len)
        .map(|k| k * len..(k + 1) * len)
        .filter(|r| 2 * signal.valid()[r.clone()].iter().filter(|v| **v).count() >= r.len())
        .map(|r| features_of(signal, r))
        .collect()
}
