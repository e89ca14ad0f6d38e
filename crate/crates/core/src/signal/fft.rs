use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::AudioSignal;
use crate::error::Result;

/// Forward/inverse FFT pair of a fixed size for real input.
pub struct RealFft {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RealFft {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Full complex spectrum of `input`, zero-padded or truncated to the FFT size.
    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = (0..self.size)
            .map(|i| Complex64::new(input.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse of a half spectrum (`size/2 + 1` bins), Hermitian-extended, scaled by 1/size.
    pub fn inverse_half(&self, half: &[Complex64]) -> Vec<f64> {
        let n = self.size;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (k, v) in half.iter().enumerate().take(n / 2 + 1) {
            buf[k] = *v;
        }
        for k in 1..n.div_ceil(2) {
            buf[n - k] = half[k].conj();
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Inverse of a full spectrum, real part, scaled by 1/size.
    pub fn inverse_full(&self, spectrum: &mut [Complex64]) -> Vec<f64> {
        self.inverse.process(spectrum);
        let scale = 1.0 / self.size as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }
}

/// Linear convolution of two sequences via FFT. Output length `a.len() + b.len() - 1`.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let fft = RealFft::new(n);
    let fa = fft.forward(a);
    let fb = fft.forward(b);
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let mut out = fft.inverse_full(&mut prod);
    out.truncate(out_len);
    out
}

impl AudioSignal {
    /// Convolves with an impulse response, keeping the full output.
    pub fn convolve(&self, ir: &AudioSignal) -> Result<AudioSignal> {
        self.check_rate(ir)?;
        Ok(AudioSignal::new(
            fft_convolve(&self.samples, &ir.samples),
            self.sample_rate,
        ))
    }
}
