//! Noise- and reverberation-robust speaker verification.
//!
//! The crate covers the full chain: corruption of clean speech with room responses,
//! additive noise and a telephone channel; a spectral denoising autoencoder; an MFCC
//! front-end; a GMM-UBM / i-vector / PLDA backend; and EER-based evaluation.

pub mod backend;
pub mod corpus;
pub mod corruption;
pub mod enhancement;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod signal;
pub mod util;
pub mod vad;

pub use error::{Error, Result};
pub use signal::{AudioSignal, Spectrogram, SAMPLE_RATE};
