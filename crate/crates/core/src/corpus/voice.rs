//! Source-filter speech synthesizer used as a stand-in for recorded telephone speech.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::signal::AudioSignal;

/// Reference formant triples `(F1, F2, F3)` in Hz.
const VOWELS: [[f64; 3]; 8] = [
    [270.0, 2290.0, 3010.0],
    [390.0, 1990.0, 2550.0],
    [530.0, 1840.0, 2480.0],
    [660.0, 1720.0, 2410.0],
    [730.0, 1090.0, 2440.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
    [490.0, 1350.0, 1690.0],
];

/// Relative level of the additive recording floor.
const NOISE_FLOOR: f64 = 3e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct VoiceProfile {
    pub f0: f64,
    pub f0_range: f64,
    pub tract_scale: f64,
    /// Per-vowel multiplicative formant offsets.
    pub vowel_offsets: Vec<[f64; 3]>,
    pub bandwidth_scale: f64,
    /// Pole radius of the glottal low-pass (spectral tilt).
    pub tilt_pole: f64,
    pub fricative_center: f64,
    pub breathiness: f64,
    pub phone_ms: f64,
}

impl VoiceProfile {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let female = rng.random_bool(0.5);
        let f0 = if female {
            rng.random_range(165.0..250.0)
        } else {
            rng.random_range(85.0..150.0)
        };
        let tract_scale = if female {
            rng.random_range(1.05..1.2)
        } else {
            rng.random_range(0.85..1.02)
        };
        let vowel_offsets = (0..VOWELS.len())
            .map(|_| [0; 3].map(|_| 1.0 + rng.random_range(-0.09..0.09)))
            .collect();
        Self {
            f0,
            f0_range: rng.random_range(0.05..0.2),
            tract_scale,
            vowel_offsets,
            bandwidth_scale: rng.random_range(0.7..1.5),
            tilt_pole: rng.random_range(0.85..0.97),
            fricative_center: rng.random_range(2300.0..3500.0),
            breathiness: rng.random_range(0.01..0.08),
            phone_ms: rng.random_range(90.0..170.0),
        }
    }

    fn formants(&self, vowel: usize, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let base = VOWELS[vowel];
        let off = self.vowel_offsets[vowel];
        [0, 1, 2].map(|i| base[i] * off[i] * self.tract_scale * (1.0 + rng.random_range(-0.03..0.03)))
    }
}

/// Two-pole resonator normalized to unit gain at DC.
struct Resonator {
    a1: f64,
    a2: f64,
    g: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let r = (-PI * bw / fs).exp();
        let a1 = -2.0 * r * (2.0 * PI * freq / fs).cos();
        let a2 = r * r;
        Self {
            a1,
            a2,
            g: 1.0 + a1 + a2,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.g * x - self.a1 * self.y1 - self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn envelope(i: usize, n: usize, ramp: usize) -> f64 {
    let ramp = ramp.min(n / 2).max(1);
    if i < ramp {
        0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos()
    } else if i >= n - ramp {
        0.5 - 0.5 * (PI * (n - i) as f64 / ramp as f64).cos()
    } else {
        1.0
    }
}

fn voiced(profile: &VoiceProfile, formants: [f64; 3], f0: f64, n: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bws = [60.0, 90.0, 140.0].map(|b| b * profile.bandwidth_scale);
    let mut res: Vec<Resonator> = (0..3).map(|i| Resonator::new(formants[i], bws[i], fs)).collect();
    let (mut lp1, mut lp2) = (0.0, 0.0);
    let p = profile.tilt_pole;
    let mut phase = rng.random_range(0.0..1.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // slow declination of pitch across the phone
        let f = f0 * (1.0 - 0.08 * i as f64 / n as f64);
        phase += f * (1.0 + 0.01 * rng.random_range(-1.0..1.0)) / fs;
        let mut x = 0.0;
        if phase >= 1.0 {
            phase -= 1.0;
            x = 1.0;
        }
        let z: f64 = StandardNormal.sample(rng);
        lp1 = (1.0 - p) * x + p * lp1;
        lp2 = (1.0 - p) * lp1 + p * lp2;
        let mut y = lp2 * fs / f0.max(1.0) + profile.breathiness * z;
        for r in &mut res {
            y = r.step(y);
        }
        out.push(y * envelope(i, n, (0.015 * fs) as usize));
    }
    out
}

fn fricative(profile: &VoiceProfile, n: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let center = profile.fricative_center * (1.0 + rng.random_range(-0.05..0.05));
    let mut r1 = Resonator::new(center, 600.0, fs);
    let mut r2 = Resonator::new(center * 0.7, 900.0, fs);
    (0..n)
        .map(|i| {
            let z: f64 = StandardNormal.sample(rng);
            let y = r1.step(z) + 0.5 * r2.step(z);
            0.15 * y * envelope(i, n, (0.01 * fs) as usize)
        })
        .collect()
}

/// Renders one utterance of roughly `duration_s` seconds: words of voiced and fricative
/// phones separated by pauses, with leading and trailing silence.
pub fn synth_utterance(profile: &VoiceProfile, duration_s: f64, sample_rate: u32, rng: &mut ChaCha8Rng) -> AudioSignal {
    let fs = sample_rate as f64;
    let total = (duration_s * fs).round() as usize;
    let mut out = vec![0.0; total];
    let lead = (rng.random_range(0.15..0.3) * fs) as usize;
    let tail = (rng.random_range(0.15..0.3) * fs) as usize;
    let f0_utt = profile.f0 * (1.0 + rng.random_range(-0.06..0.06));
    let mut pos = lead;
    while pos + tail < total {
        let phones = rng.random_range(2..5);
        for _ in 0..phones {
            let ms = profile.phone_ms * rng.random_range(0.7..1.4);
            let n = ((ms / 1000.0) * fs) as usize;
            if pos + n + tail >= total {
                break;
            }
            let seg = if rng.random_bool(0.2) {
                fricative(profile, n, fs, rng)
            } else {
                let v = rng.random_range(0..VOWELS.len());
                let f0 = f0_utt * (1.0 + profile.f0_range * rng.random_range(-1.0..1.0));
                let formants = profile.formants(v, rng);
                let level = rng.random_range(0.6..1.0);
                voiced(profile, formants, f0, n, fs, rng).into_iter().map(|x| x * level).collect()
            };
            for (k, v) in seg.into_iter().enumerate() {
                out[pos + k] += v;
            }
            // short overlap between phones within a word
            pos += n.saturating_sub((0.01 * fs) as usize);
        }
        pos += (rng.random_range(0.08..0.3) * fs) as usize;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { rng.random_range(0.3..0.7) / peak } else { 1.0 };
    for v in &mut out {
        let z: f64 = StandardNormal.sample(rng);
        *v = *v * gain + NOISE_FLOOR * z;
    }
    AudioSignal::new(out, sample_rate)
}
