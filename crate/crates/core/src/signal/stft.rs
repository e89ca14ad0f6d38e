use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::{AudioSignal, RealFft};
use crate::error::{Error, Result};

/// Magnitude floor applied before taking logs.
pub const MAG_FLOOR: f64 = 1e-8;

/// Analysis framing: frame length, hop and FFT size in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FrameGeometry {
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
}

impl Default for FrameGeometry {
    /// 25 ms / 10 ms at 8 kHz with a 256-point FFT (129 bins).
    fn default() -> Self {
        Self {
            frame_len: 200,
            hop: 80,
            fft_size: 256,
        }
    }
}

impl FrameGeometry {
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 {
            return Err(Error::Geometry("hop must be positive".into()));
        }
        if self.frame_len == 0 || self.frame_len > self.fft_size {
            return Err(Error::Geometry(format!(
                "frame_len {} must be in 1..={}",
                self.frame_len, self.fft_size
            )));
        }
        if self.hop > self.frame_len {
            return Err(Error::Geometry(format!(
                "hop {} exceeds frame_len {}",
                self.hop, self.frame_len
            )));
        }
        Ok(())
    }

    /// `1 + floor((len - frame_len) / hop)`; a signal shorter than one frame yields one
    /// zero-padded frame.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.frame_len {
            1
        } else {
            1 + (len - self.frame_len) / self.hop
        }
    }

    /// Signal length produced by overlap-adding `frames` frames.
    pub fn signal_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.frame_len
        }
    }
}

/// Symmetric Hamming window.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Log-magnitude and phase per frame, row-major `frames x bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub log_mag: Vec<f64>,
    pub phase: Vec<f64>,
    pub frames: usize,
    pub bins: usize,
    pub geometry: FrameGeometry,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.log_mag[t * self.bins..(t + 1) * self.bins]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.log_mag[t * self.bins..(t + 1) * self.bins]
    }

    pub fn phase_frame(&self, t: usize) -> &[f64] {
        &self.phase[t * self.bins..(t + 1) * self.bins]
    }

    /// Mean squared difference of log magnitudes against another spectrogram.
    pub fn mse(&self, other: &Spectrogram) -> Result<f64> {
        if self.frames != other.frames || self.bins != other.bins {
            return Err(Error::Dimension(format!(
                "spectrogram {}x{} vs {}x{}",
                self.frames, self.bins, other.frames, other.bins
            )));
        }
        let sum: f64 = self
            .log_mag
            .iter()
            .zip(&other.log_mag)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.log_mag.len() as f64)
    }
}

fn wrap_phase(p: f64) -> f64 {
    // atan2 may return exactly -pi; the phase range is (-pi, pi].
    if p <= -PI {
        p + 2.0 * PI
    } else {
        p
    }
}

/// Hamming-windowed short-time Fourier transform.
pub fn stft(signal: &AudioSignal, geometry: FrameGeometry) -> Result<Spectrogram> {
    geometry.validate()?;
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    let FrameGeometry {
        frame_len, hop, ..
    } = geometry;
    let bins = geometry.bins();
    let frames = geometry.frame_count(signal.len());
    let window = hamming(frame_len);
    let fft = RealFft::new(geometry.fft_size);
    let floor_log = MAG_FLOOR.ln();
    let mut log_mag = Vec::with_capacity(frames * bins);
    let mut phase = Vec::with_capacity(frames * bins);
    let mut buf = vec![0.0; frame_len];
    for t in 0..frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = signal.samples.get(start + i).copied().unwrap_or(0.0) * window[i];
        }
        let spec = fft.forward(&buf);
        for c in &spec[..bins] {
            let m = c.norm();
            log_mag.push(if m > MAG_FLOOR { m.ln() } else { floor_log });
            phase.push(wrap_phase(c.im.atan2(c.re)));
        }
    }
    Ok(Spectrogram {
        log_mag,
        phase,
        frames,
        bins,
        geometry,
        sample_rate: signal.sample_rate,
    })
}

/// Weighted overlap-add resynthesis with squared-window normalization.
pub fn istft(spec: &Spectrogram) -> Result<AudioSignal> {
    let geometry = spec.geometry;
    geometry.validate()?;
    if spec.bins != geometry.bins() {
        return Err(Error::Geometry(format!(
            "{} bins but fft_size {}",
            spec.bins, geometry.fft_size
        )));
    }
    let FrameGeometry {
        frame_len, hop, ..
    } = geometry;
    let window = hamming(frame_len);
    let fft = RealFft::new(geometry.fft_size);
    let out_len = geometry.signal_len(spec.frames);
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut half = vec![Complex64::new(0.0, 0.0); spec.bins];
    for t in 0..spec.frames {
        for (k, h) in half.iter_mut().enumerate() {
            *h = Complex64::from_polar(spec.frame(t)[k].exp(), spec.phase_frame(t)[k]);
        }
        let frame = fft.inverse_half(&half);
        let start = t * hop;
        for i in 0..frame_len {
            out[start + i] += frame[i] * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    for (o, n) in out.iter_mut().zip(&norm) {
        if *n > 1e-12 {
            *o /= n;
        }
    }
    Ok(AudioSignal::new(out, spec.sample_rate))
}
