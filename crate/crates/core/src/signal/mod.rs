//! Waveform containers, WAV I/O, framing and short-time spectra.

mod fft;
mod stft;
mod wav;

pub use fft::{fft_convolve, RealFft};
pub use stft::{hamming, istft, stft, FrameGeometry, Spectrogram, MAG_FLOOR};
pub use wav::{read_wav, read_wav_at, resample_linear, write_wav};

use crate::error::{Error, Result};

/// Pipeline sample rate (narrowband telephone speech).
pub const SAMPLE_RATE: u32 = 8000;

/// Mono waveform with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            (self.energy() / self.samples.len() as f64).sqrt()
        }
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self::new(
            self.samples.iter().map(|x| x * gain).collect(),
            self.sample_rate,
        )
    }

    /// Scales so the absolute peak equals `target` (no-op on silence).
    pub fn peak_normalized(&self, target: f64) -> Self {
        let p = self.peak();
        if p > 0.0 {
            self.scaled(target / p)
        } else {
            self.clone()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|x| x.is_finite())
    }

    pub(crate) fn check_rate(&self, other: &AudioSignal) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::SampleRateMismatch(
                self.sample_rate,
                other.sample_rate,
            ));
        }
        Ok(())
    }

    /// Sample-wise sum; lengths must match.
    pub fn add(&self, other: &AudioSignal) -> Result<AudioSignal> {
        self.check_rate(other)?;
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot add signals of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(AudioSignal::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            self.sample_rate,
        ))
    }
}
