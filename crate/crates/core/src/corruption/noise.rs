//! Synthetic noise sources: mains hum, spectrally shaped white noise, babble.

use std::f64::consts::PI;
use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::AudioSignal;
use crate::vad::{energy_vad, VadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseCategory {
    Hum,
    ShapedWhite,
    Babble,
    External,
}

impl fmt::Display for NoiseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseCategory::Hum => "hum",
            NoiseCategory::ShapedWhite => "shaped_white",
            NoiseCategory::Babble => "babble",
            NoiseCategory::External => "external",
        })
    }
}

impl std::str::FromStr for NoiseCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hum" => NoiseCategory::Hum,
            "shaped_white" => NoiseCategory::ShapedWhite,
            "babble" => NoiseCategory::Babble,
            "external" => NoiseCategory::External,
            _ => return Err(Error::Parse(format!("unknown noise category {s}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "train" => Split::Train,
            "dev" => Split::Dev,
            "test" => Split::Test,
            _ => return Err(Error::Parse(format!("unknown split {s}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSample {
    pub id: String,
    pub signal: AudioSignal,
    pub category: NoiseCategory,
    pub split: Split,
}

/// Sinusoidal hum with 2nd and 3rd harmonics at -20 dB and -26 dB.
pub fn synth_hum(freq_hz: f64, duration_s: f64, sample_rate: u32) -> Result<AudioSignal> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(freq_hz > 0.0 && freq_hz < nyquist) {
        return Err(Error::Aliasing {
            freq: freq_hz,
            sample_rate,
        });
    }
    let n = (duration_s * sample_rate as f64).round() as usize;
    let partials: Vec<(f64, f64)> = [(1.0, 1.0), (2.0, 0.1), (3.0, 0.05)]
        .into_iter()
        .filter(|(h, _)| h * freq_hz < nyquist)
        .map(|(h, a)| (h * freq_hz, a))
        .collect();
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            0.5 * partials
                .iter()
                .map(|(f, a)| a * (2.0 * PI * f * t).sin())
                .sum::<f64>()
        })
        .collect();
    Ok(AudioSignal::new(samples, sample_rate))
}

/// Piecewise-linear spectral envelope: `(frequency Hz, gain dB)` breakpoints,
/// held constant outside the first and last point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralShape {
    pub points: Vec<(f64, f64)>,
}

impl SpectralShape {
    pub fn flat() -> Self {
        Self {
            points: vec![(0.0, 0.0)],
        }
    }

    /// Linear tilt in dB per octave relative to 1 kHz, evaluated on a fixed grid.
    pub fn tilt(db_per_octave: f64) -> Self {
        let points = [62.5, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0]
            .iter()
            .map(|&f: &f64| (f, db_per_octave * (f / 1000.0).log2()))
            .collect();
        Self { points }
    }

    pub fn gain_db(&self, freq: f64) -> f64 {
        let p = &self.points;
        if p.is_empty() {
            return 0.0;
        }
        if freq <= p[0].0 {
            return p[0].1;
        }
        for w in p.windows(2) {
            let ((f0, g0), (f1, g1)) = (w[0], w[1]);
            if freq <= f1 {
                let a = if f1 > f0 { (freq - f0) / (f1 - f0) } else { 1.0 };
                return g0 + a * (g1 - g0);
            }
        }
        p[p.len() - 1].1
    }
}

/// White Gaussian noise filtered in the frequency domain by `shape`, scaled to RMS 0.1.
pub fn synth_shaped_white(
    shape: &SpectralShape,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioSignal> {
    let n = (duration_s * sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(Error::Precondition("zero-length noise".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let f = bin as f64 * sample_rate as f64 / n as f64;
        *c *= 10f64.powf(shape.gain_db(f) / 20.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let sig = AudioSignal::new(buf.iter().map(|c| c.re / n as f64).collect(), sample_rate);
    let rms = sig.rms();
    Ok(if rms > 0.0 { sig.scaled(0.1 / rms) } else { sig })
}

/// Speech frames of `signal` (per its own VAD), hop-sized chunks concatenated.
fn speech_only(signal: &AudioSignal, vad: &VadConfig) -> Result<Vec<f64>> {
    let mask = energy_vad(signal, vad)?;
    let mut out = Vec::new();
    for (t, &f) in mask.flags.iter().enumerate() {
        if f {
            let start = t * vad.hop;
            let end = (start + vad.hop).min(signal.len());
            out.extend_from_slice(&signal.samples[start..end]);
        }
    }
    Ok(out)
}

/// Sums `k` randomly chosen talkers from `pool`. Each stream has its silent frames
/// removed, is RMS-equalized and looped to `len` samples; the sum is peak-normalized to 0.9.
pub fn synth_babble(
    pool: &[AudioSignal],
    k: usize,
    len: usize,
    vad: &VadConfig,
    seed: u64,
) -> Result<AudioSignal> {
    if pool.is_empty() {
        return Err(Error::EmptyData("babble speech pool".into()));
    }
    if k < 2 || pool.len() < k {
        return Err(Error::Precondition(format!(
            "babble needs 2 <= k <= pool size; k = {k}, pool = {}",
            pool.len()
        )));
    }
    let rate = pool[0].sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = sample(&mut rng, pool.len(), k).into_vec();
    chosen.sort_unstable();
    let mut mix = vec![0.0; len];
    for idx in chosen {
        let s = &pool[idx];
        if s.sample_rate != rate {
            return Err(Error::SampleRateMismatch(rate, s.sample_rate));
        }
        let stream = speech_only(s, vad)?;
        if stream.is_empty() {
            continue;
        }
        let rms = (stream.iter().map(|x| x * x).sum::<f64>() / stream.len() as f64).sqrt();
        if rms == 0.0 {
            continue;
        }
        for (i, m) in mix.iter_mut().enumerate() {
            *m += stream[i % stream.len()] / rms;
        }
    }
    Ok(AudioSignal::new(mix, rate).peak_normalized(0.9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::RealFft;

    #[test]
    fn hum_peaks_at_fundamental() {
        let h = synth_hum(50.0, 4.0, 8000).unwrap();
        assert_eq!(h.len(), 32000);
        let fft = RealFft::new(32000);
        let spec = fft.forward(&h.samples);
        let arg = (1..16000)
            .max_by(|&a, &b| spec[a].norm().partial_cmp(&spec[b].norm()).unwrap())
            .unwrap();
        assert_eq!(arg as f64 * 8000.0 / 32000.0, 50.0);
    }

    #[test]
    fn hum_rejects_aliasing() {
        assert!(matches!(synth_hum(4000.0, 1.0, 8000), Err(Error::Aliasing { .. })));
        assert!(synth_hum(3999.0, 0.1, 8000).is_ok());
    }

    #[test]
    fn shape_interpolation() {
        let s = SpectralShape {
            points: vec![(100.0, 0.0), (1100.0, -10.0)],
        };
        assert_eq!(s.gain_db(50.0), 0.0);
        assert!((s.gain_db(600.0) + 5.0).abs() < 1e-12);
        assert_eq!(s.gain_db(3000.0), -10.0);
    }

    #[test]
    fn babble_precondition_errors() {
        let one = vec![AudioSignal::new(vec![0.1; 1000], 8000)];
        assert!(matches!(
            synth_babble(&one, 2, 100, &VadConfig::default(), 0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            synth_babble(&[], 2, 100, &VadConfig::default(), 0),
            Err(Error::EmptyData(_))
        ));
    }

    #[test]
    fn babble_of_identical_streams_is_the_stream() {
        let s: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.05).sin() * 0.3).collect();
        let sig = AudioSignal::new(s, 8000);
        let out = synth_babble(&[sig.clone(), sig.clone()], 2, 4000, &VadConfig::default(), 1).unwrap();
        let one = synth_babble(&[sig.clone(), sig.clone(), sig], 2, 4000, &VadConfig::default(), 9).unwrap();
        for (a, b) in out.samples.iter().zip(&one.samples) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((out.peak() - 0.9).abs() < 1e-12);
    }
}
