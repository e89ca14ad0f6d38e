//! A-weighted, VAD-gated SNR measurement and noise gain.

use super::aweight::a_weight_filter;
use crate::error::{Error, Result};
use crate::signal::AudioSignal;
use crate::util::{db_to_power, power_to_db};
use crate::vad::VadMask;

/// Energy summed over the frames flagged as speech.
pub fn gated_energy(signal: &AudioSignal, mask: &VadMask) -> f64 {
    mask.flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(t, _)| {
            signal.samples[mask.frame_range(t, signal.len())]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
        })
        .sum()
}

fn weighted_energies(speech: &AudioSignal, noise: &AudioSignal, mask: &VadMask) -> Result<(f64, f64)> {
    speech.check_rate(noise)?;
    if mask.speech_frames() == 0 {
        return Err(Error::NoSpeech);
    }
    let es = gated_energy(&a_weight_filter(speech), mask);
    let en = gated_energy(&a_weight_filter(noise), mask);
    Ok((es, en))
}

/// Gain for `noise` so that the A-weighted SNR over speech frames equals `target_snr_db`.
pub fn snr_scale(speech: &AudioSignal, noise: &AudioSignal, mask: &VadMask, target_snr_db: f64) -> Result<f64> {
    let (es, en) = weighted_energies(speech, noise, mask)?;
    if en <= 0.0 {
        return Err(Error::ZeroNoiseEnergy);
    }
    Ok((es / (en * db_to_power(target_snr_db))).sqrt())
}

/// A-weighted SNR in dB over the speech frames of `mask`.
pub fn measure_snr(speech: &AudioSignal, noise: &AudioSignal, mask: &VadMask) -> Result<f64> {
    let (es, en) = weighted_energies(speech, noise, mask)?;
    if en <= 0.0 {
        return Err(Error::ZeroNoiseEnergy);
    }
    Ok(power_to_db(es / en))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_speech(n_frames: usize) -> VadMask {
        VadMask {
            flags: vec![true; n_frames],
            frame_len: 200,
            hop: 80,
        }
    }

    fn random(n: usize, seed: u64) -> AudioSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioSignal::new((0..n).map(|_| rng.random_range(-0.3..0.3)).collect(), 8000)
    }

    #[test]
    fn equal_energy_unit_gain() {
        let s = random(4000, 1);
        let g = snr_scale(&s, &s, &all_speech(48), 0.0).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadruple_energy_double_gain() {
        let n = random(4000, 2);
        let s = n.scaled(2.0);
        let g = snr_scale(&s, &n, &all_speech(48), 0.0).unwrap();
        assert!((g - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_noise_hits_target() {
        let s = random(8000, 3);
        let n = random(8000, 4).scaled(0.2);
        let mut mask = all_speech(98);
        for t in (0..98).step_by(3) {
            mask.flags[t] = false;
        }
        let g = snr_scale(&s, &n, &mask, 7.0).unwrap();
        let snr = measure_snr(&s, &n.scaled(g), &mask).unwrap();
        assert!((snr - 7.0).abs() < 0.1);
    }

    #[test]
    fn error_paths() {
        let s = random(1000, 5);
        let z = AudioSignal::zeros(1000, 8000);
        assert!(matches!(snr_scale(&s, &z, &all_speech(11), 0.0), Err(Error::ZeroNoiseEnergy)));
        let none = VadMask {
            flags: vec![false; 11],
            frame_len: 200,
            hop: 80,
        };
        assert!(matches!(snr_scale(&s, &s, &none, 0.0), Err(Error::NoSpeech)));
    }
}
