//! Narrowband telephone channel: 4th-order Butterworth high-pass cascaded with a
//! 4th-order Butterworth low-pass, as second-order sections via the bilinear transform.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

/// Corner frequencies placed so 300 Hz and 3400 Hz sit about 0.5 dB down.
const HIGHPASS_HZ: f64 = 231.0;
const LOWPASS_HZ: f64 = 3550.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn lowpass(k: f64, q: f64) -> Self {
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        Biquad {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm],
        }
    }

    fn highpass(k: f64, q: f64) -> Self {
        let norm = 1.0 / (1.0 + k / q + k * k);
        Biquad {
            b: [norm, -2.0 * norm, norm],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm],
        }
    }

    /// Magnitude response at `freq`.
    pub fn gain(&self, freq: f64, sample_rate: f64) -> f64 {
        use rustfft::num_complex::Complex64;
        let w = 2.0 * PI * freq / sample_rate;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + self.b[1] * z1 + self.b[2] * z2;
        let den = 1.0 + self.a[0] * z1 + self.a[1] * z2;
        (num / den).norm()
    }

    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let inp = *v;
            let out = self.b[0] * inp + s1;
            s1 = self.b[1] * inp - self.a[0] * out + s2;
            s2 = self.b[2] * inp - self.a[1] * out;
            *v = out;
        }
    }
}

/// Q factors of the two conjugate pole pairs of a 4th-order Butterworth prototype.
fn butterworth4_q() -> [f64; 2] {
    [1, 2].map(|k| 1.0 / (2.0 * (PI * (2 * k - 1) as f64 / 8.0).cos()))
}

/// Second-order sections of the band-pass telephone channel at `sample_rate`.
pub fn telephone_sections(sample_rate: u32) -> Vec<Biquad> {
    let fs = sample_rate as f64;
    let k_hp = (PI * HIGHPASS_HZ / fs).tan();
    let k_lp = (PI * LOWPASS_HZ / fs).tan();
    let q = butterworth4_q();
    vec![
        Biquad::highpass(k_hp, q[0]),
        Biquad::highpass(k_hp, q[1]),
        Biquad::lowpass(k_lp, q[0]),
        Biquad::lowpass(k_lp, q[1]),
    ]
}

pub fn telephone_gain_db(freq: f64, sample_rate: u32) -> f64 {
    let g: f64 = telephone_sections(sample_rate)
        .iter()
        .map(|s| s.gain(freq, sample_rate as f64))
        .product();
    20.0 * g.log10()
}

/// Band-limits to the 300-3400 Hz telephone band. Requires 8 kHz input.
pub fn telephone_filter(signal: &AudioSignal) -> Result<AudioSignal> {
    if signal.sample_rate != 8000 {
        return Err(Error::Precondition(format!(
            "telephone channel is defined at 8000 Hz, got {}",
            signal.sample_rate
        )));
    }
    let mut x = signal.samples.clone();
    for s in telephone_sections(signal.sample_rate) {
        s.run(&mut x);
    }
    Ok(AudioSignal::new(x, signal.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(f: f64, n: usize) -> AudioSignal {
        AudioSignal::new(
            (0..n).map(|i| (2.0 * PI * f * i as f64 / 8000.0).sin()).collect(),
            8000,
        )
    }

    fn steady_rms_db(f: f64) -> f64 {
        let x = sine(f, 16000);
        let y = telephone_filter(&x).unwrap();
        // skip the transient
        let tail = |s: &AudioSignal| {
            let v = &s.samples[8000..];
            (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt()
        };
        20.0 * (tail(&y) / tail(&x)).log10()
    }

    #[test]
    fn passband_and_stopband() {
        assert!(steady_rms_db(1000.0).abs() < 1.0);
        assert!(steady_rms_db(60.0) <= -30.0);
        assert!(steady_rms_db(3900.0) <= -30.0);
    }

    #[test]
    fn ripple_within_one_db() {
        let mut f = 300.0;
        while f <= 3400.0 {
            let g = telephone_gain_db(f, 8000);
            assert!(g.abs() <= 1.0, "{f} Hz: {g} dB");
            f += 25.0;
        }
        assert!(telephone_gain_db(60.0, 8000) <= -30.0);
        assert!(telephone_gain_db(3900.0, 8000) <= -30.0);
    }

    #[test]
    fn zero_in_zero_out() {
        let y = telephone_filter(&AudioSignal::zeros(500, 8000)).unwrap();
        assert!(y.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_other_rates() {
        assert!(telephone_filter(&AudioSignal::zeros(10, 16000)).is_err());
    }
}
