//! A stand-in re-identification attacker and the biometric privacy metrics.

mod attacker;
mod features;
mod metrics;

pub use attacker::{
    train_attacker, train_attacker_on_features, Attacker, AttackerConfig, AttackerEpoch, Embedding, FeatureScaler,
};
pub use features::{extract_features, FeatureVector, FEATURE_DIM, FEATURE_NAMES, SACCADE_VELOCITY_DEG_S, SUBSEQUENCE_S};
pub use metrics::{
    compute_eer, compute_rank1, embedded_probes, enroll, rank1_from_embeddings, roc_points, score, score_embeddings, Eer,
    RocPoint, Score, ScoreKind, ScoreSet, Templates,
};
