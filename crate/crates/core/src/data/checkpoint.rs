use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::attack::Attacker;
use crate::autoencoder::{Architecture, AutoencoderModel, TrainingMetadata};
use crate::error::{Error, Result};
use crate::nn::{Mlp, ParameterSet, Tensor};
use crate::utility::PredictorModel;

pub const CHECKPOINT_VERSION: u32 = 1;

pub const AUTOENCODER_KIND: &str = "gaze-privacy/autoencoder";
pub const ATTACKER_KIND: &str = "gaze-privacy/attacker";
pub const PREDICTOR_KIND: &str = "gaze-privacy/predictor";

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    kind: &'a str,
    version: u32,
    model: &'a T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeIn {
    kind: String,
    version: u32,
    model: serde_json::Value,
}

/// Writes `model` as a versioned JSON document. Floats round-trip exactly.
pub fn save_document<T: Serialize>(path: &Path, kind: &str, model: &T) -> Result<()> {
    let text = serde_json::to_string(&EnvelopeOut {
        kind,
        version: CHECKPOINT_VERSION,
        model,
    })
    .map_err(|e| Error::Checkpoint(format!("cannot encode {kind}: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a document written by [`save_document`], checking kind and version.
pub fn load_document<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let env: EnvelopeIn = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("corrupt checkpoint {}: {e}", path.display())))?;
    if env.kind != kind {
        return Err(Error::Checkpoint(format!(
            "{} holds a {:?} model, expected {kind:?}",
            path.display(),
            env.kind
        )));
    }
    if env.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "{} has checkpoint version {}, this build reads version {CHECKPOINT_VERSION}",
            path.display(),
            env.version
        )));
    }
    serde_json::from_value(env.model)
        .map_err(|e| Error::Checkpoint(format!("corrupt {kind} model in {}: {e}", path.display())))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutoencoderDoc {
    architecture: Architecture,
    encoder: Vec<Tensor>,
    decoder: Vec<Tensor>,
    metadata: Option<TrainingMetadata>,
}

pub fn save_autoencoder(path: &Path, model: &AutoencoderModel) -> Result<()> {
    let doc = AutoencoderDoc {
        architecture: model.architecture().clone(),
        encoder: model.encoder().params().iter().cloned().collect(),
        decoder: model.decoder().params().iter().cloned().collect(),
        metadata: model.metadata.clone(),
    };
    save_document(path, AUTOENCODER_KIND, &doc)
}

/// Loads an autoencoder, verifying every tensor against the stored
/// architecture.
pub fn load_autoencoder(path: &Path) -> Result<AutoencoderModel> {
    let doc: AutoencoderDoc = load_document(path, AUTOENCODER_KIND)?;
    let a = doc.architecture;
    a.validate()?;
    let encoder = Mlp::from_parameters(a.encoder.clone(), "encoder", ParameterSet::from_tensors(doc.encoder)?)?;
    let decoder = Mlp::from_parameters(a.decoder.clone(), "decoder", ParameterSet::from_tensors(doc.decoder)?)?;
    AutoencoderModel::from_parts(a, encoder, decoder, doc.metadata)
}

/// Loads an autoencoder and requires a specific architecture.
pub fn load_autoencoder_expecting(path: &Path, expected: &Architecture) -> Result<AutoencoderModel> {
    let m = load_autoencoder(path)?;
    if m.architecture() != expected {
        return Err(Error::shape(
            format!("autoencoder in {}", path.display()),
            &expected.encoder.dims,
            &m.architecture().encoder.dims,
        ));
    }
    Ok(m)
}

pub fn save_attacker(path: &Path, model: &Attacker) -> Result<()> {
    save_document(path, ATTACKER_KIND, model)
}

pub fn load_attacker(path: &Path) -> Result<Attacker> {
    let m: Attacker = load_document(path, ATTACKER_KIND)?;
    m.validate()?;
    Ok(m)
}

pub fn save_predictor(path: &Path, model: &PredictorModel) -> Result<()> {
    save_document(path, PREDICTOR_KIND, model)
}

pub fn load_predictor(path: &Path) -> Result<PredictorModel> {
    let m: PredictorModel = load_document(path, PREDICTOR_KIND)?;
    m.validate()?;
    Ok(m)
}
