use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::rir::RirPair;
use super::snr::snr_scale;
use super::telephone::telephone_filter;
use crate::error::{Error, Result};
use crate::signal::AudioSignal;
use crate::vad::{energy_vad, VadConfig, VadMask};

/// Convolves with `rir` and keeps `speech.len()` samples starting at `offset`.
pub fn reverberate(speech: &AudioSignal, rir: &AudioSignal, offset: usize) -> Result<AudioSignal> {
    let full = speech.convolve(rir)?;
    let samples = (0..speech.len())
        .map(|i| full.samples.get(offset + i).copied().unwrap_or(0.0))
        .collect();
    Ok(AudioSignal::new(samples, speech.sample_rate))
}

/// Loops or crops `noise` to `len` samples starting at `offset` (with wraparound).
pub fn fit_noise(noise: &AudioSignal, len: usize, offset: usize) -> Result<AudioSignal> {
    if noise.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n = noise.len();
    Ok(AudioSignal::new(
        (0..len).map(|i| noise.samples[(offset + i) % n]).collect(),
        noise.sample_rate,
    ))
}

/// Everything produced by one corruption, including the pre-mix components
/// (after reverberation, before summation and the telephone channel).
#[derive(Debug, Clone)]
pub struct Corrupted {
    pub signal: AudioSignal,
    pub speech_component: AudioSignal,
    pub noise_component: Option<AudioSignal>,
    /// VAD computed on the original clean speech; used for SNR gating.
    pub mask: VadMask,
    pub noise_gain: f64,
    pub noise_offset: usize,
}

/// Optional stages of the corruption chain.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorruptionPlan<'a> {
    pub rir: Option<&'a RirPair>,
    pub noise: Option<&'a AudioSignal>,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// Reverberates speech and noise with separate responses from the same room, scales the
/// noise to the target A-weighted VAD-gated SNR, sums and applies the telephone channel.
///
/// Reverberated signals are aligned to the direct path of the speech response and trimmed
/// to the speech length.
pub fn corrupt(speech: &AudioSignal, plan: &CorruptionPlan<'_>, vad: &VadConfig) -> Result<Corrupted> {
    if speech.is_empty() {
        return Err(Error::EmptySignal);
    }
    let mask = energy_vad(speech, vad)?;
    let offset = plan.rir.map(RirPair::speech_delay).unwrap_or(0);
    let speech_component = match plan.rir {
        Some(pair) => reverberate(speech, &pair.speech_rir, offset)?,
        None => speech.clone(),
    };
    let (noise_component, noise_gain, noise_offset) = match (plan.noise, plan.snr_db) {
        (Some(noise), Some(snr)) => {
            speech.check_rate(noise)?;
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            let noise_offset = rng.random_range(0..noise.len().max(1));
            let fitted = fit_noise(noise, speech.len(), noise_offset)?;
            let reverbed = match plan.rir {
                Some(pair) => reverberate(&fitted, &pair.noise_rir, offset)?,
                None => fitted,
            };
            let g = snr_scale(&speech_component, &reverbed, &mask, snr)?;
            (Some(reverbed.scaled(g)), g, noise_offset)
        }
        (Some(_), None) => {
            return Err(Error::Precondition("noise given without a target SNR".into()))
        }
        _ => (None, 0.0, 0),
    };
    let mix = match &noise_component {
        Some(n) => speech_component.add(n)?,
        None => speech_component.clone(),
    };
    Ok(Corrupted {
        signal: telephone_filter(&mix)?,
        speech_component,
        noise_component,
        mask,
        noise_gain,
        noise_offset,
    })
}
