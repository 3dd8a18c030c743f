//! Synthetic gaze recordings with subject-specific oculomotor signatures.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::recording::{Recording, RecordingMeta};
use super::derive_seed;
use crate::error::{Error, Result};
use crate::signal::GazeSignal;

/// Generated positions never leave this box.
pub const SYNTH_LIMIT_DEG: f64 = 30.0;

/// Saccade targets are reflected to stay inside this box.
const TARGET_LIMIT_DEG: f64 = 25.0;

const MIN_FIXATION_MS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectParams {
    /// Gamma shape of fixation durations; the scale follows from
    /// `saccade_rate`.
    pub fixation_shape: f64,
    /// Saccades per second; 0 yields a single endless fixation.
    pub saccade_rate: f64,
    /// Per-sample Gaussian positional noise during fixations (deg).
    pub jitter_std: f64,
    /// Diffusion of the random-walk drift during fixations (deg/√s).
    pub drift: f64,
    /// Main sequence: duration = slope · amplitude + intercept.
    pub main_sequence_slope_ms: f64,
    pub main_sequence_intercept_ms: f64,
    /// Gamma distribution of saccade amplitudes (deg).
    pub amplitude_shape: f64,
    pub amplitude_scale: f64,
    /// Vertical share of saccade directions; 1 is isotropic.
    pub vertical_ratio: f64,
    /// Center of the subject's gaze distribution (deg).
    pub bias_x: f64,
    pub bias_y: f64,
    /// Expected signal-loss bursts per second.
    pub dropout_rate: f64,
}

impl Default for SubjectParams {
    fn default() -> Self {
        Self {
            fixation_shape: 4.0,
            saccade_rate: 2.5,
            jitter_std: 0.01,
            drift: 0.1,
            main_sequence_slope_ms: 2.2,
            main_sequence_intercept_ms: 21.0,
            amplitude_shape: 3.0,
            amplitude_scale: 2.5,
            vertical_ratio: 0.8,
            bias_x: 0.0,
            bias_y: 0.0,
            dropout_rate: 0.0,
        }
    }
}

impl SubjectParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("fixation_shape", self.fixation_shape),
            ("main_sequence_slope_ms", self.main_sequence_slope_ms),
            ("main_sequence_intercept_ms", self.main_sequence_intercept_ms),
            ("amplitude_shape", self.amplitude_shape),
            ("amplitude_scale", self.amplitude_scale),
            ("vertical_ratio", self.vertical_ratio),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("saccade_rate", self.saccade_rate),
            ("jitter_std", self.jitter_std),
            ("drift", self.drift),
            ("dropout_rate", self.dropout_rate),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        for (name, v) in [("bias_x", self.bias_x), ("bias_y", self.bias_y)] {
            if !(v.abs() <= TARGET_LIMIT_DEG) {
                return Err(Error::domain(format!("{name} must lie within ±{TARGET_LIMIT_DEG}°, got {v}")));
            }
        }
        if self.saccade_rate > 0.0 && self.mean_fixation_ms() <= MIN_FIXATION_MS {
            return Err(Error::domain(format!(
                "saccade rate {} /s leaves no time for fixations",
                self.saccade_rate
            )));
        }
        Ok(())
    }

    pub fn mean_amplitude(&self) -> f64 {
        self.amplitude_shape * self.amplitude_scale
    }

    /// Saccade duration for an amplitude, in ms.
    pub fn saccade_duration_ms(&self, amplitude: f64) -> f64 {
        self.main_sequence_slope_ms * amplitude + self.main_sequence_intercept_ms
    }

    /// Mean fixation duration that yields `saccade_rate` saccades per second.
    pub fn mean_fixation_ms(&self) -> f64 {
        1000.0 / self.saccade_rate - self.saccade_duration_ms(self.mean_amplitude())
    }

    /// Draws a plausible, distinct subject.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let amplitude_shape = rng.random_range(2.0..5.0);
        let mean_amp = rng.random_range(4.0..11.0);
        Self {
            fixation_shape: rng.random_range(2.0..9.0),
            saccade_rate: rng.random_range(1.6..3.4),
            jitter_std: rng.random_range(0.004..0.015),
            drift: rng.random_range(0.05..0.3),
            main_sequence_slope_ms: rng.random_range(1.8..2.8),
            main_sequence_intercept_ms: rng.random_range(17.0..25.0),
            amplitude_shape,
            amplitude_scale: mean_amp / amplitude_shape,
            vertical_ratio: rng.random_range(0.4..1.0),
            bias_x: rng.random_range(-5.0..5.0),
            bias_y: rng.random_range(-5.0..5.0),
            dropout_rate: 0.0,
        }
    }

    /// Session-to-session variation: every rate and scale is multiplied by
    /// an independent factor in `1 ± spread`, and offsets shift by up to
    /// `spread` degrees.
    pub fn perturbed<R: Rng + ?Sized>(&self, spread: f64, rng: &mut R) -> Self {
        if spread <= 0.0 {
            return self.clone();
        }
        let mut f = |v: f64| v * (1.0 + rng.random_range(-spread..spread));
        let mut p = Self {
            fixation_shape: f(self.fixation_shape),
            saccade_rate: f(self.saccade_rate),
            jitter_std: f(self.jitter_std),
            drift: f(self.drift),
            main_sequence_slope_ms: f(self.main_sequence_slope_ms),
            main_sequence_intercept_ms: f(self.main_sequence_intercept_ms),
            amplitude_shape: self.amplitude_shape,
            amplitude_scale: f(self.amplitude_scale),
            vertical_ratio: f(self.vertical_ratio).min(1.0),
            bias_x: self.bias_x,
            bias_y: self.bias_y,
            dropout_rate: self.dropout_rate,
        };
        p.bias_x = (p.bias_x + rng.random_range(-spread..spread)).clamp(-TARGET_LIMIT_DEG, TARGET_LIMIT_DEG);
        p.bias_y = (p.bias_y + rng.random_range(-spread..spread)).clamp(-TARGET_LIMIT_DEG, TARGET_LIMIT_DEG);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Fixation,
    Saccade,
}

/// Ground-truth event over samples `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeEvent {
    pub kind: EventKind,
    pub start: usize,
    pub end: usize,
    /// Saccade amplitude in degrees; 0 for fixations.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub signal: GazeSignal,
    pub events: Vec<GazeEvent>,
}

/// Raised-cosine velocity profile: fraction of the amplitude covered at
/// normalized time `tau` in `[0, 1]`.
pub fn raised_cosine_progress(tau: f64) -> f64 {
    tau - (2.0 * PI * tau).sin() / (2.0 * PI)
}

/// Alternating fixations and main-sequence saccades.
///
/// The recording starts with a fixation at the subject's bias offset.
pub fn generate_subject(params: &SubjectParams, duration_s: f64, sample_rate: f64, seed: u64) -> Result<Generated> {
    params.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::domain(format!("duration must be positive, got {duration_s} s")));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::domain(format!("sample rate must be positive, got {sample_rate} Hz")));
    }
    let n = (duration_s * sample_rate).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ms_to_samples = |ms: f64| (ms * sample_rate / 1000.0).round() as usize;

    let fix_dist = if params.saccade_rate > 0.0 {
        Some(Gamma::new(params.fixation_shape, params.mean_fixation_ms() / params.fixation_shape).map_err(|e| Error::domain(e.to_string()))?)
    } else {
        None
    };
    let amp_dist = Gamma::new(params.amplitude_shape, params.amplitude_scale).map_err(|e| Error::domain(e.to_string()))?;
    let jitter = Normal::new(0.0, params.jitter_std).map_err(|e| Error::domain(e.to_string()))?;
    let drift_step = Normal::new(0.0, params.drift / sample_rate.sqrt()).map_err(|e| Error::domain(e.to_string()))?;

    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut events = Vec::new();
    let mut center = (params.bias_x, params.bias_y);
    let clamp = |v: f64| v.clamp(-SYNTH_LIMIT_DEG, SYNTH_LIMIT_DEG);

    while x.len() < n {
        // fixation
        let len = match &fix_dist {
            Some(d) => ms_to_samples(d.sample(&mut rng).max(MIN_FIXATION_MS)).max(1),
            None => n - x.len(),
        };
        let start = x.len();
        let (mut dx, mut dy) = (0.0, 0.0);
        for _ in 0..len.min(n - start) {
            dx += drift_step.sample(&mut rng);
            dy += drift_step.sample(&mut rng);
            x.push(clamp(center.0 + dx + jitter.sample(&mut rng)));
            y.push(clamp(center.1 + dy + jitter.sample(&mut rng)));
        }
        events.push(GazeEvent {
            kind: EventKind::Fixation,
            start,
            end: x.len(),
            amplitude: 0.0,
        });
        if x.len() >= n {
            break;
        }

        // saccade from the drifted fixation position
        let from = (clamp(center.0 + dx), clamp(center.1 + dy));
        let amp: f64 = amp_dist.sample(&mut rng).clamp(1.0, 20.0);
        let theta: f64 = rng.random_range(0.0..2.0 * PI);
        let dir = (theta.cos(), params.vertical_ratio * theta.sin());
        let norm = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        let mut step = (amp * dir.0 / norm, amp * dir.1 / norm);
        if (from.0 + step.0).abs() > TARGET_LIMIT_DEG {
            step.0 = -step.0;
        }
        if (from.1 + step.1).abs() > TARGET_LIMIT_DEG {
            step.1 = -step.1;
        }
        let to = (
            (from.0 + step.0).clamp(-TARGET_LIMIT_DEG, TARGET_LIMIT_DEG),
            (from.1 + step.1).clamp(-TARGET_LIMIT_DEG, TARGET_LIMIT_DEG),
        );
        let amplitude = ((to.0 - from.0).powi(2) + (to.1 - from.1).powi(2)).sqrt();
        let len = ms_to_samples(params.saccade_duration_ms(amplitude)).max(2);
        let start = x.len();
        for k in 0..len.min(n - start) {
            let p = raised_cosine_progress((k + 1) as f64 / len as f64);
            x.push(from.0 + (to.0 - from.0) * p);
            y.push(from.1 + (to.1 - from.1) * p);
        }
        events.push(GazeEvent {
            kind: EventKind::Saccade,
            start,
            end: x.len(),
            amplitude,
        });
        center = to;
    }

    if params.dropout_rate > 0.0 {
        let p_start = params.dropout_rate / sample_rate;
        let mut k = 0;
        while k < n {
            if rng.random_bool(p_start.min(1.0)) {
                let len = ms_to_samples(rng.random_range(40.0..120.0)).max(1);
                for j in k..(k + len).min(n) {
                    x[j] = f64::NAN;
                    y[j] = f64::NAN;
                }
                k += len;
            } else {
                k += 1;
            }
        }
    }

    let signal = GazeSignal::uniform(0.0, x, y, sample_rate)?;
    Ok(Generated { signal, events })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub subjects: usize,
    pub sessions: u32,
    pub duration_s: f64,
    pub sample_rate: f64,
    pub task: String,
    /// Id of the first subject; the others follow consecutively.
    pub first_subject_id: u32,
    /// Relative session-to-session parameter variation.
    pub session_variability: f64,
    pub dropout_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            subjects: 20,
            sessions: 2,
            duration_s: 60.0,
            sample_rate: 250.0,
            task: "RAN".into(),
            first_subject_id: 1,
            session_variability: 0.05,
            dropout_rate: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.sessions == 0 {
            return Err(Error::domain("synthetic corpus needs at least one subject and session"));
        }
        if !(self.duration_s > 0.0 && self.sample_rate > 0.0) {
            return Err(Error::domain("synthetic duration and sample rate must be positive"));
        }
        if !(0.0..0.5).contains(&self.session_variability) || !(self.dropout_rate >= 0.0) {
            return Err(Error::domain("session variability must be in [0, 0.5) and dropout rate non-negative"));
        }
        if self.task.is_empty() || self.task.contains('_') {
            return Err(Error::domain(format!("task name {:?} must be non-empty without '_'", self.task)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSubject {
    pub id: u32,
    pub params: SubjectParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecording {
    pub recording: Recording,
    pub seed: u64,
    pub params: SubjectParams,
    pub events: Vec<GazeEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub subjects: Vec<SynthSubject>,
    pub recordings: Vec<SynthRecording>,
}

/// Generates every subject × session recording. Deterministic in `seed`.
pub fn generate_corpus(config: &SynthConfig, seed: u64) -> Result<SynthCorpus> {
    config.validate()?;
    let subjects: Vec<SynthSubject> = (0..config.subjects)
        .map(|k| {
            let id = config.first_subject_id + k as u32;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[id as u64]));
            let mut params = SubjectParams::sample(&mut rng);
            params.dropout_rate = config.dropout_rate;
            SynthSubject { id, params }
        })
        .collect();
    let jobs: Vec<(&SynthSubject, u32)> = subjects
        .iter()
        .flat_map(|s| (1..=config.sessions).map(move |sess| (s, sess)))
        .collect();
    let recordings = jobs
        .par_iter()
        .map(|(s, session)| {
            let rec_seed = derive_seed(seed, &[s.id as u64, *session as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(rec_seed);
            let params = s.params.perturbed(config.session_variability, &mut rng);
            let g = generate_subject(&params, config.duration_s, config.sample_rate, rng.random())?;
            Ok(SynthRecording {
                recording: Recording {
                    meta: RecordingMeta::new(s.id, *session, config.task.clone()),
                    signal: g.signal,
                },
                seed: rec_seed,
                params,
                events: g.events,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthCorpus { subjects, recordings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn still_subject_is_constant() {
        let p = SubjectParams {
            jitter_std: 0.0,
            drift: 0.0,
            saccade_rate: 0.0,
            bias_x: 2.0,
            bias_y: -1.0,
            ..Default::default()
        };
        let g = generate_subject(&p, 2.0, 250.0, 7).unwrap();
        assert_eq!(g.signal.len(), 500);
        assert!(g.signal.x().iter().all(|v| *v == 2.0));
        assert!(g.signal.y().iter().all(|v| *v == -1.0));
        assert_eq!(g.events.len(), 1);
    }

    #[test]
    fn deterministic_and_bounded() {
        let p = SubjectParams::default();
        let a = generate_subject(&p, 20.0, 250.0, 1).unwrap();
        let b = generate_subject(&p, 20.0, 250.0, 1).unwrap();
        let c = generate_subject(&p, 20.0, 250.0, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.signal, c.signal);
        assert!(a.signal.x().iter().chain(a.signal.y()).all(|v| v.abs() <= SYNTH_LIMIT_DEG));
        assert!(a.signal.valid().iter().all(|v| *v));
    }

    #[test]
    fn events_tile_the_recording() {
        let g = generate_subject(&SubjectParams::default(), 10.0, 1000.0, 3).unwrap();
        assert_eq!(g.events[0].start, 0);
        assert_eq!(g.events.last().unwrap().end, g.signal.len());
        assert!(g.events.windows(2).all(|w| w[0].end == w[1].start && w[0].kind != w[1].kind));
    }

    #[test]
    fn dropout_marks_invalid_bursts() {
        let p = SubjectParams {
            dropout_rate: 1.0,
            ..Default::default()
        };
        let g = generate_subject(&p, 20.0, 250.0, 4).unwrap();
        let invalid = g.signal.valid().iter().filter(|v| !**v).count();
        assert!(invalid > 0 && invalid < g.signal.len() / 2, "{invalid}");
    }

    #[test]
    fn rejects_bad_params() {
        let p = SubjectParams {
            saccade_rate: 40.0,
            ..Default::default()
        };
        assert!(generate_subject(&p, 1.0, 250.0, 0).is_err());
        assert!(generate_subject(&SubjectParams::default(), 0.0, 250.0, 0).is_err());
    }

    #[test]
    fn corpus_layout() {
        let cfg = SynthConfig {
            subjects: 3,
            duration_s: 2.0,
            ..Default::default()
        };
        let c = generate_corpus(&cfg, 11).unwrap();
        assert_eq!(c.recordings.len(), 6);
        assert_eq!(c.recordings[1].recording.meta, RecordingMeta::new(1, 2, "RAN"));
        assert_eq!(c, generate_corpus(&cfg, 11).unwrap());
        assert_ne!(c.subjects[0].params, c.subjects[1].params);
    }
}
