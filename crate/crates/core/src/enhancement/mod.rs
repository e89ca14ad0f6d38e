//! Spectral enhancement autoencoder: maps a context window of corrupted log-magnitude frames
//! to the clean central frame.

mod model;
mod model_io;
mod network;
mod pairs;

pub use model::{train_mlp, MlpModel, Normalization, TrainConfig, TrainOutcome, STD_FLOOR};
pub use model_io::{decode_model, encode_model, load_model, save_model};
pub use network::{Activation, Gradients, Layer, Network};
pub use pairs::{build_pairs, stack_context, PairSource, SpectralPairs, TrainPair};

use crate::error::Result;
use crate::signal::{istft, stft, AudioSignal, FrameGeometry};

/// Waveform-in, waveform-out enhancement (noisy phase, overlap-add resynthesis).
/// The output is trimmed or zero-padded to the input length.
pub fn enhance_signal(model: &MlpModel, signal: &AudioSignal, geometry: FrameGeometry) -> Result<AudioSignal> {
    let spec = stft(signal, geometry)?;
    let enhanced = model.enhance(&spec)?;
    let mut out = istft(&enhanced)?;
    out.samples.resize(signal.len(), 0.0);
    Ok(out)
}
