//! Stage-level building blocks shared by the command line and the end-to-end
//! tests: corpus handling, privatization of whole corpora and per-level
//! evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{
    compute_eer, embedded_probes, enroll, rank1_from_embeddings, roc_points, score_embeddings, train_attacker, Attacker,
    AttackerConfig, RocPoint, ScoreSet,
};
use crate::autoencoder::{privatize, AutoencoderModel, PrivacyLevel};
use crate::data::{derive_seed_str, load_csv, write_csv, DatasetSplit, Recording, RecordingMeta};
use crate::error::{Error, Result};
use crate::signal::{downsample, window_split, WindowBatch};
use crate::utility::{
    horizon_samples, prediction_error_cdf, signal_mse, train_predictor, Forecaster, PredictionErrors, PredictorConfig,
    PredictorModel,
};

/// Name of the unprivatized reference level.
pub const RAW_LEVEL: &str = "Raw";

/// A set of recordings ordered by subject, session and task.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub recordings: Vec<Recording>,
}

impl Corpus {
    pub fn new(mut recordings: Vec<Recording>) -> Self {
        recordings.sort_by(|a, b| a.meta.cmp(&b.meta));
        Self { recordings }
    }

    pub fn len(&self) -> usize {
        self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty()
    }

    /// Reads every `S_<subject>_S<session>_<task>*.csv` file of a directory,
    /// keeping only `task` when given.
    pub fn load_dir(dir: &Path, task: Option<&str>) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<PathBuf> = Vec::new();
        for entry in entries {
            let p = entry.map_err(|e| Error::io(dir, e))?.path();
            if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                paths.push(p);
            }
        }
        paths.sort();
        let loaded: Vec<Option<Recording>> = paths
            .par_iter()
            .map(|p| {
                let l = load_csv(p)?;
                let meta = l.meta.ok_or_else(|| {
                    Error::format(Some(p), "file name does not follow S_<subject>_S<session>_<task>.csv")
                })?;
                if task.is_some_and(|t| !t.is_empty() && t != meta.task) {
                    return Ok(None);
                }
                Ok(Some(Recording { meta, signal: l.signal }))
            })
            .collect::<Result<_>>()?;
        let recordings: Vec<Recording> = loaded.into_iter().flatten().collect();
        if recordings.is_empty() {
            return Err(Error::format(
                Some(dir),
                format!("no recordings{} found", task.map(|t| format!(" of task {t}")).unwrap_or_default()),
            ));
        }
        Ok(Self::new(recordings))
    }

    /// Writes one CSV per recording and returns the written paths.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.recordings
            .par_iter()
            .map(|r| {
                let p = dir.join(r.meta.file_name());
                write_csv(&p, &r.signal)?;
                Ok(p)
            })
            .collect()
    }

    pub fn subjects(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.recordings.iter().map(|r| r.meta.subject).collect();
        s.dedup();
        s
    }

    pub fn select(&self, keep: impl Fn(&RecordingMeta) -> bool) -> Vec<&Recording> {
        self.recordings.iter().filter(|r| keep(&r.meta)).collect()
    }

    /// Recording with the same subject, session and task, ignoring suffixes.
    pub fn find(&self, meta: &RecordingMeta) -> Option<&Recording> {
        self.recordings
            .iter()
            .find(|r| r.meta.subject == meta.subject && r.meta.session == meta.session && r.meta.task == meta.task)
    }

    /// Boxcar-downsamples every recording to `target_rate` Hz.
    pub fn resampled(&self, target_rate: f64) -> Result<Self> {
        let recordings = self
            .recordings
            .par_iter()
            .map(|r| {
                let factor = downsample_factor(r.signal.sample_rate(), target_rate)
                    .map_err(|e| Error::format(None, format!("{}: {e}", r.meta.file_name())))?;
                let signal = if factor == 1 { r.signal.clone() } else { downsample(&r.signal, factor)? };
                Ok(Recording {
                    meta: r.meta.clone(),
                    signal,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { recordings })
    }
}

/// Integer factor taking `source` Hz to `target` Hz.
pub fn downsample_factor(source: f64, target: f64) -> Result<usize> {
    let f = source / target;
    let r = f.round();
    if !(r >= 1.0) || (f - r).abs() > 1e-6 * r {
        return Err(Error::domain(format!(
            "sample rate {source} Hz is not an integer multiple of {target} Hz"
        )));
    }
    Ok(r as usize)
}

/// Fully valid windows of the given recordings, labeled by subject.
pub fn training_windows(recordings: &[&Recording], window_len: usize) -> Result<WindowBatch> {
    let parts: Vec<(u32, WindowBatch)> = recordings
        .par_iter()
        .map(|r| Ok((r.meta.subject, window_split(&r.signal, &r.meta.id(), window_len, true)?)))
        .collect::<Result<_>>()?;
    WindowBatch::concat_labeled(parts)
}

/// Log entry for one privatized recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivatizedFile {
    pub source: String,
    pub output: String,
    pub level: String,
    pub sigma: f64,
    pub noise_seed: u64,
    pub bypassed_windows: usize,
    pub filled_samples: usize,
    pub passthrough_samples: usize,
}

/// Privatizes every recording. The noise seed of a file is derived from the
/// master seed and the file id, so it does not depend on corpus order.
pub fn privatize_corpus(
    model: &AutoencoderModel,
    corpus: &Corpus,
    level: &PrivacyLevel,
    master_seed: u64,
) -> Result<(Corpus, Vec<PrivatizedFile>)> {
    let out: Vec<(Recording, PrivatizedFile)> = corpus
        .recordings
        .par_iter()
        .map(|r| {
            let seed = derive_seed_str(master_seed, &r.meta.id());
            let p = privatize(model, &r.signal, level, seed)
                .map_err(|e| annotate(e, &format!("privatizing {}", r.meta.file_name())))?;
            let meta = r.meta.with_suffix(level.name.clone());
            let log = PrivatizedFile {
                source: r.meta.file_name(),
                output: meta.file_name(),
                level: level.name.clone(),
                sigma: level.sigma,
                noise_seed: seed,
                bypassed_windows: p.bypassed_windows,
                filled_samples: p.filled_samples,
                passthrough_samples: p.passthrough_tail.len(),
            };
            Ok((Recording { meta, signal: p.signal }, log))
        })
        .collect::<Result<_>>()?;
    let (recordings, logs) = out.into_iter().unzip();
    Ok((Corpus { recordings }, logs))
}

fn annotate(e: Error, context: &str) -> Error {
    match e {
        Error::NonFinite(m) => Error::NonFinite(format!("{context}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{context}: {m}")),
        other => other,
    }
}

/// Which subjects and sessions play which role in an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub split: DatasetSplit,
    pub enroll_session: u32,
    pub probe_session: u32,
}

impl EvalProtocol {
    /// Attacker and predictor train on every non-test subject.
    pub fn is_model_training(&self, meta: &RecordingMeta) -> bool {
        !self.split.contains_test(meta.subject)
    }

    pub fn is_test(&self, meta: &RecordingMeta) -> bool {
        self.split.contains_test(meta.subject)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMse {
    pub recording: String,
    pub subject: u32,
    pub mse: f64,
}

/// Biometric results of one level for one noise seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyOutcome {
    pub eer: f64,
    pub eer_threshold: f64,
    pub rank1: f64,
    pub scores: ScoreSet,
    pub roc: Vec<RocPoint>,
    pub attacker: Attacker,
}

/// Trains an attacker on the level's training-subject data, enrolls test
/// subjects on one session and probes with the other.
pub fn evaluate_privacy(data: &Corpus, protocol: &EvalProtocol, config: &AttackerConfig, seed: u64) -> Result<PrivacyOutcome> {
    let train: Vec<(u32, &crate::GazeSignal)> = data
        .select(|m| protocol.is_model_training(m))
        .into_iter()
        .map(|r| (r.meta.subject, &r.signal))
        .collect();
    let (attacker, _) = train_attacker(&train, config, seed)?;
    let pick = |session: u32| -> Vec<(u32, &crate::GazeSignal)> {
        data.select(|m| protocol.is_test(m) && m.session == session)
            .into_iter()
            .map(|r| (r.meta.subject, &r.signal))
            .collect()
    };
    let enroll_set = pick(protocol.enroll_session);
    let probe_set = pick(protocol.probe_session);
    if enroll_set.is_empty() || probe_set.is_empty() {
        return Err(Error::domain(format!(
            "test subjects need sessions {} and {}",
            protocol.enroll_session, protocol.probe_session
        )));
    }
    let templates = enroll(&attacker, &enroll_set)?;
    let probes = embedded_probes(&attacker, &probe_set)?;
    let scores = score_embeddings(&templates, &probes);
    let eer = compute_eer(&scores)?;
    let roc = roc_points(&scores)?;
    let rank1 = rank1_from_embeddings(&templates, &probes)?;
    Ok(PrivacyOutcome {
        eer: eer.eer,
        eer_threshold: eer.threshold,
        rank1,
        scores,
        roc,
        attacker,
    })
}

/// Per-recording MSE of `data` against its raw counterpart.
pub fn corpus_mse(raw: &Corpus, data: &Corpus, keep: impl Fn(&RecordingMeta) -> bool) -> Result<Vec<RecordingMse>> {
    data.recordings
        .iter()
        .filter(|r| keep(&r.meta))
        .map(|r| {
            let reference = raw
                .find(&r.meta)
                .ok_or_else(|| Error::domain(format!("no raw recording for {}", r.meta.file_name())))?;
            Ok(RecordingMse {
                recording: r.meta.id(),
                subject: r.meta.subject,
                mse: signal_mse(&reference.signal, &r.signal)?,
            })
        })
        .collect()
}

pub fn mean_mse(items: &[RecordingMse]) -> Option<f64> {
    (!items.is_empty()).then(|| items.iter().map(|m| m.mse).sum::<f64>() / items.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityOutcome {
    pub model: PredictorModel,
    pub errors: PredictionErrors,
    pub baseline: PredictionErrors,
}

/// Trains a predictor on the level's training-subject data and measures its
/// error on the test subjects of the same level.
pub fn evaluate_utility(data: &Corpus, protocol: &EvalProtocol, config: &PredictorConfig, seed: u64) -> Result<UtilityOutcome> {
    let train: Vec<&crate::GazeSignal> = data
        .select(|m| protocol.is_model_training(m))
        .into_iter()
        .map(|r| &r.signal)
        .collect();
    let (model, _) = train_predictor(&train, config, seed)?;
    let test: Vec<&crate::GazeSignal> = data.select(|m| protocol.is_test(m)).into_iter().map(|r| &r.signal).collect();
    let errors = prediction_error_cdf(Forecaster::Model(&model), &test, config.eval_stride)?;
    let horizon = horizon_samples(config.horizon_ms, model.sample_rate)?;
    let baseline = prediction_error_cdf(
        Forecaster::LastPosition {
            history: config.history,
            horizon,
        },
        &test,
        config.eval_stride,
    )?;
    Ok(UtilityOutcome { model, errors, baseline })
}

/// Count of valid samples outside ±90° per channel; always 0 for signals
/// built through [`crate::GazeSignal`], checked again for reporting.
pub fn range_violations(corpus: &Corpus) -> usize {
    corpus
        .recordings
        .iter()
        .map(|r| {
            (0..r.signal.len())
                .filter_map(|k| r.signal.position(k))
                .filter(|(x, y)| x.abs() > crate::signal::MAX_ANGLE_DEG || y.abs() > crate::signal::MAX_ANGLE_DEG)
                .count()
        })
        .sum()
}

/// Groups recordings by subject id.
pub fn by_subject(corpus: &Corpus) -> BTreeMap<u32, Vec<&Recording>> {
    let mut m: BTreeMap<u32, Vec<&Recording>> = BTreeMap::new();
    for r in &corpus.recordings {
        m.entry(r.meta.subject).or_default().push(r);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GazeSignal;

    #[test]
    fn factors() {
        assert_eq!(downsample_factor(1000.0, 250.0).unwrap(), 4);
        assert_eq!(downsample_factor(250.0, 250.0).unwrap(), 1);
        assert!(downsample_factor(1000.0, 300.0).is_err());
        assert!(downsample_factor(100.0, 250.0).is_err());
    }

    #[test]
    fn corpus_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mk = |s, sess| Recording {
            meta: RecordingMeta::new(s, sess, "RAN"),
            signal: GazeSignal::uniform(0.0, vec![0.5, 1.0, 1.5, 2.0], vec![0.0; 4], 1000.0).unwrap(),
        };
        let c = Corpus::new(vec![mk(2, 1), mk(1, 2), mk(1, 1)]);
        assert_eq!(c.recordings[0].meta, RecordingMeta::new(1, 1, "RAN"));
        c.write_dir(dir.path()).unwrap();
        let l = Corpus::load_dir(dir.path(), Some("RAN")).unwrap();
        assert_eq!(l, c);
        assert_eq!(l.subjects(), vec![1, 2]);
        assert!(Corpus::load_dir(dir.path(), Some("TEX")).is_err());
        let r = l.resampled(250.0).unwrap();
        assert_eq!(r.recordings[0].signal.len(), 1);
        assert_eq!(r.recordings[0].signal.x()[0], 1.25);
    }
}
