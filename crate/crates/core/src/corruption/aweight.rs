//! IEC A-weighting, normalized to 0 dB at 1 kHz, applied as a zero-phase
//! frequency-domain gain.

use rustfft::FftPlanner;
use rustfft::num_complex::Complex64;

use crate::signal::AudioSignal;

fn a_weight_magnitude(f: f64) -> f64 {
    const F1: f64 = 20.598997;
    const F2: f64 = 107.65265;
    const F3: f64 = 737.86223;
    const F4: f64 = 12194.217;
    let f2 = f * f;
    F4 * F4 * f2 * f2
        / ((f2 + F1 * F1) * ((f2 + F2 * F2) * (f2 + F3 * F3)).sqrt() * (f2 + F4 * F4))
}

/// Linear amplitude gain (1.0 at 1 kHz).
pub fn a_weight_gain(freq: f64) -> f64 {
    a_weight_magnitude(freq) / a_weight_magnitude(1000.0)
}

pub fn a_weight_gain_db(freq: f64) -> f64 {
    20.0 * a_weight_gain(freq).log10()
}

/// Filters the whole signal with the exact A-weighting magnitude response.
pub fn a_weight_filter(signal: &AudioSignal) -> AudioSignal {
    let n = signal.len();
    if n == 0 {
        return signal.clone();
    }
    let mut buf: Vec<Complex64> = signal
        .samples
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        *c *= a_weight_gain(bin as f64 * signal.sample_rate as f64 / n as f64);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    AudioSignal::new(
        buf.iter().map(|c| c.re / n as f64).collect(),
        signal.sample_rate,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn anchor_points() {
        assert!(a_weight_gain_db(1000.0).abs() < 0.01);
        assert!((a_weight_gain_db(100.0) + 19.1).abs() < 0.2);
        assert!((a_weight_gain_db(2000.0) - 1.2).abs() < 0.2);
    }

    #[test]
    fn filter_matches_analytic_response() {
        for f in [100.0, 250.0, 500.0, 1000.0, 2000.0, 3800.0] {
            let n = 8000;
            let x = AudioSignal::new(
                (0..n).map(|i| (2.0 * PI * f * i as f64 / 8000.0).sin()).collect(),
                8000,
            );
            let y = a_weight_filter(&x);
            let measured = 20.0 * (y.rms() / x.rms()).log10();
            assert!((measured - a_weight_gain_db(f)).abs() < 0.5, "{f} Hz");
        }
    }
}
