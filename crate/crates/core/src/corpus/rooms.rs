//! Random shoebox rooms and measured-style responses for the desk-scale RIR pools.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corruption::rir::Point;
use crate::corruption::{RirPair, RoomSpec};
use crate::error::Result;
use crate::signal::AudioSignal;

fn point_inside(dims: &Point, margin: f64, rng: &mut ChaCha8Rng) -> Point {
    [0, 1, 2].map(|i| rng.random_range(margin..dims[i] - margin))
}

fn distance(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn spaced_point(dims: &Point, from: &Point, min_dist: f64, rng: &mut ChaCha8Rng) -> Point {
    loop {
        let p = point_inside(dims, 0.5, rng);
        if distance(&p, from) >= min_dist {
            return p;
        }
    }
}

/// Draws an office-to-hall sized room with speech and noise sources at least 1 m from the mic.
pub fn random_room(id: &str, max_order: usize, rng: &mut ChaCha8Rng) -> RoomSpec {
    let dims = [rng.random_range(3.0..8.0), rng.random_range(3.0..7.0), rng.random_range(2.4..3.6)];
    let reflection = [0; 6].map(|_| rng.random_range(0.55..0.93));
    let mic_pos = point_inside(&dims, 0.5, rng);
    let source_pos = spaced_point(&dims, &mic_pos, 1.0, rng);
    let noise_pos = spaced_point(&dims, &mic_pos, 1.0, rng);
    RoomSpec {
        id: id.to_string(),
        dims,
        reflection,
        source_pos,
        noise_pos,
        mic_pos,
        max_order,
    }
}

/// Sabine reverberation time in seconds, using `1 - beta^2` as wall absorption.
pub fn sabine_t60(room: &RoomSpec) -> f64 {
    let [lx, ly, lz] = room.dims;
    let areas = [ly * lz, ly * lz, lx * lz, lx * lz, lx * ly, lx * ly];
    let absorption: f64 = areas
        .iter()
        .zip(&room.reflection)
        .map(|(s, b)| s * (1.0 - b * b))
        .sum();
    0.161 * lx * ly * lz / absorption.max(1e-9)
}

/// Late reverberation starts this long after the direct path.
const MIXING_TIME_S: f64 = 0.05;

fn with_tail(early: &AudioSignal, t60: f64, ratio: f64, rng: &mut ChaCha8Rng) -> AudioSignal {
    let fs = early.sample_rate as f64;
    let onset = early
        .samples
        .iter()
        .position(|v| *v != 0.0)
        .unwrap_or(0);
    let start = onset + (MIXING_TIME_S * fs) as usize;
    let len = (onset + (t60 * fs) as usize).max(start + 1).max(early.len());
    let decay = 6.9078 / (t60 * fs);
    let mut tail: Vec<f64> = (0..len)
        .map(|i| {
            if i < start {
                return 0.0;
            }
            let z: f64 = StandardNormal.sample(rng);
            z * (-decay * (i - onset) as f64).exp()
        })
        .collect();
    let te: f64 = tail.iter().map(|v| v * v).sum();
    let g = if te > 0.0 { (ratio * early.energy() / te).sqrt() } else { 0.0 };
    for (i, v) in tail.iter_mut().enumerate() {
        *v *= g;
        if i < early.len() {
            *v += early.samples[i];
        }
    }
    AudioSignal::new(tail, early.sample_rate)
}

/// Image-source response with an exponentially decaying diffuse tail (Sabine T60),
/// standing in for a measured room response.
pub fn measured_style_pair(room: &RoomSpec, sample_rate: u32, rng: &mut ChaCha8Rng) -> Result<RirPair> {
    let early = room.rir_pair(sample_rate)?;
    let t60 = sabine_t60(room).clamp(0.15, 1.2);
    let ratio = rng.random_range(0.1..0.6);
    let speech = with_tail(&early.speech_rir, t60, ratio, rng);
    let noise = with_tail(&early.noise_rir, t60, ratio, rng);
    RirPair::new(room.id.clone(), speech, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn rooms_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..50 {
            let r = random_room(&format!("r{i}"), 6, &mut rng);
            r.validate().unwrap();
            assert!(distance(&r.source_pos, &r.mic_pos) >= 1.0);
            let t = sabine_t60(&r);
            assert!(t > 0.05 && t < 3.0, "{t}");
        }
    }

    #[test]
    fn tail_extends_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let room = random_room("m", 3, &mut rng);
        let early = room.rir_pair(8000).unwrap();
        let p = measured_style_pair(&room, 8000, &mut rng).unwrap();
        assert!(p.speech_rir.len() >= early.speech_rir.len());
        assert!(p.speech_rir.energy() > early.speech_rir.energy());
        // direct path untouched before onset
        let onset = early.speech_rir.samples.iter().position(|v| *v != 0.0).unwrap();
        assert!(p.speech_rir.samples[..onset].iter().all(|v| *v == 0.0));
    }
}
