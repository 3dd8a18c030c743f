//! Pipeline configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::AttackerConfig;
use crate::autoencoder::{PrivacyLevel, TrainConfig};
use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::signal::DEFAULT_WINDOW_LEN;
use crate::utility::PredictorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Raw corpus directory; `synth` writes here.
    pub data_dir: PathBuf,
    /// Root for checkpoints, privatized corpora and reports.
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("output"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Recordings are boxcar-downsampled to this rate; the source rate must
    /// be an integer multiple of it.
    pub target_rate_hz: f64,
    pub window_len: usize,
    /// Only files of this task are read; empty reads every task.
    pub task: String,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_rate_hz: 250.0,
            window_len: DEFAULT_WINDOW_LEN,
            task: "RAN".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Train, validation and test fractions of the subjects.
    pub fractions: [f64; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            fractions: [0.4, 0.2, 0.4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub enroll_session: u32,
    pub probe_session: u32,
    /// Noise seeds per privacy level; metrics are averaged over them.
    pub noise_seeds: usize,
    /// Train and evaluate a gaze predictor for every level.
    pub predictor: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            enroll_session: 1,
            probe_session: 2,
            noise_seeds: 1,
            predictor: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Master seed from which every stage seed is derived.
    pub seed: u64,
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub preprocess: PreprocessConfig,
    pub split: SplitConfig,
    pub training: TrainConfig,
    pub privacy_levels: Vec<PrivacyLevel>,
    pub attacker: AttackerConfig,
    pub predictor: PredictorConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: PathsConfig::default(),
            synth: SynthConfig {
                subjects: 50,
                ..SynthConfig::default()
            },
            preprocess: PreprocessConfig::default(),
            split: SplitConfig::default(),
            training: TrainConfig::default(),
            privacy_levels: PrivacyLevel::standard_levels(),
            attacker: AttackerConfig::default(),
            predictor: PredictorConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration is always serializable")
    }

    /// Checks every section; any failure is reported as a config error.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.synth.validate().map_err(wrap)?;
        self.training.validate().map_err(wrap)?;
        self.attacker.validate().map_err(wrap)?;
        self.predictor.validate().map_err(wrap)?;
        let p = &self.preprocess;
        if !(p.target_rate_hz > 0.0 && p.target_rate_hz.is_finite()) {
            return Err(Error::Config(format!("target_rate_hz must be positive, got {}", p.target_rate_hz)));
        }
        if p.window_len == 0 {
            return Err(Error::Config("window_len must be positive".into()));
        }
        let f = self.split.fractions;
        if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions must be non-negative and sum to 1, got {f:?}")));
        }
        if self.privacy_levels.is_empty() {
            return Err(Error::Config("at least one privacy level is required".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for level in &self.privacy_levels {
            level.validate().map_err(wrap)?;
            if level.name.contains(['/', '\\', ',']) || level.name.starts_with('.') {
                return Err(Error::Config(format!("privacy level name {:?} is not usable in file names", level.name)));
            }
            if !names.insert(level.name.to_ascii_lowercase()) {
                return Err(Error::Config(format!("duplicate privacy level {:?}", level.name)));
            }
        }
        let e = &self.evaluation;
        if e.enroll_session == e.probe_session {
            return Err(Error::Config("enroll and probe sessions must differ".into()));
        }
        if e.noise_seeds == 0 {
            return Err(Error::Config("noise_seeds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn level(&self, name: &str) -> Option<&PrivacyLevel> {
        self.privacy_levels.iter().find(|l| l.name == name)
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.paths.output_dir.join("checkpoints")
    }

    pub fn autoencoder_path(&self) -> PathBuf {
        self.checkpoint_dir().join("autoencoder.json")
    }

    pub fn privatized_dir(&self, level: &str) -> PathBuf {
        self.paths.output_dir.join("privatized").join(level)
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.paths.output_dir.join("reports")
    }
}
