//! Dataset ingestion, synthetic corpora, subject splits and model files.

mod checkpoint;
mod recording;
mod split;
pub mod synth;

pub use checkpoint::{
    load_attacker, load_autoencoder, load_autoencoder_expecting, load_document, load_predictor, save_attacker,
    save_autoencoder, save_document, save_predictor, ATTACKER_KIND, AUTOENCODER_KIND, CHECKPOINT_VERSION, PREDICTOR_KIND,
};
pub use recording::{load_csv, write_csv, LoadedCsv, Recording, RecordingMeta};
pub use split::{make_split, DatasetSplit};
pub use synth::{
    generate_corpus, generate_subject, EventKind, GazeEvent, Generated, SubjectParams, SynthConfig, SynthCorpus,
    SynthRecording, SynthSubject,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a component identified by `parts`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, p| splitmix64(acc ^ splitmix64(*p)))
}

/// Child seed for a component identified by a name, e.g. a recording id.
pub fn derive_seed_str(master: u64, name: &str) -> u64 {
    let h = Sha256::digest(name.as_bytes());
    derive_seed(master, &[u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))])
}

/// Lower-case hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub id: u32,
    pub params: SubjectParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub subject: u32,
    pub session: u32,
    pub task: String,
    pub seed: u64,
    pub params: SubjectParams,
}

/// Description of a synthetic corpus written next to its files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub corpus_id: String,
    pub master_seed: u64,
    pub generator: SynthConfig,
    pub subjects: Vec<ManifestSubject>,
    pub files: Vec<ManifestFile>,
}

impl CorpusManifest {
    /// Builds the manifest; `corpus_id` hashes the generator settings and
    /// seed so identical inputs share an id.
    pub fn new(config: &SynthConfig, seed: u64, corpus: &SynthCorpus) -> Self {
        let key = serde_json::to_string(&(config, seed)).expect("serializable config");
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            corpus_id: format!("synth-{}", &sha256_hex(key.as_bytes())[..16]),
            master_seed: seed,
            generator: config.clone(),
            subjects: corpus
                .subjects
                .iter()
                .map(|s| ManifestSubject {
                    id: s.id,
                    params: s.params.clone(),
                })
                .collect(),
            files: corpus
                .recordings
                .iter()
                .map(|r| ManifestFile {
                    path: r.recording.meta.file_name(),
                    subject: r.recording.meta.subject,
                    session: r.recording.meta.session,
                    task: r.recording.meta.task.clone(),
                    seed: r.seed,
                    params: r.params.clone(),
                })
                .collect(),
        }
    }
}
