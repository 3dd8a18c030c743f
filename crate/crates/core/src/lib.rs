//! Privatization of eye-tracking gaze signals with a latent-noise
//! autoencoder, plus the biometric attacker and utility metrics used to
//! measure the privacy/utility trade-off.

pub mod attack;
pub mod autoencoder;
pub mod config;
pub mod data;
pub mod error;
pub mod losses;
pub mod nn;
pub mod pipeline;
pub mod report;
pub mod signal;
pub mod utility;

pub use error::{Error, ErrorClass, Result};
pub use signal::GazeSignal;
