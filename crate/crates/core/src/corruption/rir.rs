//! Image-source room impulse responses (omnidirectional, nearest-sample delays).

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const MAX_REFLECTION_ORDER: usize = 20;

pub type Point = [f64; 3];

/// Shoebox room with per-wall reflection coefficients
/// ordered `[x=0, x=Lx, y=0, y=Ly, z=0, z=Lz]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomSpec {
    pub id: String,
    pub dims: Point,
    pub reflection: [f64; 6],
    pub source_pos: Point,
    pub noise_pos: Point,
    pub mic_pos: Point,
    pub max_order: usize,
}

impl RoomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Room(format!("{}: non-positive dimensions", self.id)));
        }
        if self.reflection.iter().any(|&b| !(0.0..1.0).contains(&b)) {
            return Err(Error::Room(format!(
                "{}: reflection coefficients must lie in [0, 1)",
                self.id
            )));
        }
        if self.max_order > MAX_REFLECTION_ORDER {
            return Err(Error::Room(format!(
                "{}: max_order {} exceeds {MAX_REFLECTION_ORDER}",
                self.id, self.max_order
            )));
        }
        for p in [&self.source_pos, &self.noise_pos, &self.mic_pos] {
            self.check_inside(p)?;
        }
        Ok(())
    }

    fn check_inside(&self, p: &Point) -> Result<()> {
        if p.iter().zip(&self.dims).any(|(&c, &d)| !(c > 0.0 && c < d)) {
            return Err(Error::Room(format!(
                "{}: position {p:?} outside room {:?}",
                self.id, self.dims
            )));
        }
        Ok(())
    }

    /// Parses one manifest line:
    /// `id Lx Ly Lz b1..b6 sx sy sz nx ny nz mx my mz max_order`.
    pub fn parse_line(line: &str) -> Result<RoomSpec> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 20 {
            return Err(Error::Parse(format!(
                "room line needs 20 fields, found {}: {line}",
                toks.len()
            )));
        }
        let nums = toks[1..19]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("room line {line}: {e}")))?;
        let max_order = toks[19]
            .parse()
            .map_err(|e| Error::Parse(format!("room line {line}: {e}")))?;
        let room = RoomSpec {
            id: toks[0].to_string(),
            dims: [nums[0], nums[1], nums[2]],
            reflection: nums[3..9].try_into().unwrap(),
            source_pos: [nums[9], nums[10], nums[11]],
            noise_pos: [nums[12], nums[13], nums[14]],
            mic_pos: [nums[15], nums[16], nums[17]],
            max_order,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn parse_manifest(text: &str) -> Result<Vec<RoomSpec>> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(RoomSpec::parse_line)
            .collect()
    }

    /// Speech and noise responses from the two source positions to the microphone.
    pub fn rir_pair(&self, sample_rate: u32) -> Result<RirPair> {
        Ok(RirPair {
            room_id: self.id.clone(),
            speech_rir: generate_rir(self, self.source_pos, self.mic_pos, sample_rate)?,
            noise_rir: generate_rir(self, self.noise_pos, self.mic_pos, sample_rate)?,
        })
    }
}

impl fmt::Display for RoomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)?;
        for v in self
            .dims
            .iter()
            .chain(&self.reflection)
            .chain(&self.source_pos)
            .chain(&self.noise_pos)
            .chain(&self.mic_pos)
        {
            write!(f, " {v:?}")?;
        }
        write!(f, " {}", self.max_order)
    }
}

/// Two responses measured in one room: one for the talker, one for the noise source.
#[derive(Debug, Clone, PartialEq)]
pub struct RirPair {
    pub room_id: String,
    pub speech_rir: AudioSignal,
    pub noise_rir: AudioSignal,
}

impl RirPair {
    pub fn new(room_id: impl Into<String>, speech_rir: AudioSignal, noise_rir: AudioSignal) -> Result<Self> {
        speech_rir.check_rate(&noise_rir)?;
        if speech_rir.is_empty() || noise_rir.is_empty() {
            return Err(Error::Precondition("empty RIR".into()));
        }
        Ok(Self {
            room_id: room_id.into(),
            speech_rir,
            noise_rir,
        })
    }

    /// Scales both responses by one factor so the speech response has unit energy.
    pub fn energy_normalized(&self) -> RirPair {
        let e = self.speech_rir.energy();
        if e <= 0.0 {
            return self.clone();
        }
        let g = 1.0 / e.sqrt();
        RirPair {
            room_id: self.room_id.clone(),
            speech_rir: self.speech_rir.scaled(g),
            noise_rir: self.noise_rir.scaled(g),
        }
    }

    /// Index of the direct-path (largest) tap of the speech response.
    pub fn speech_delay(&self) -> usize {
        argmax_abs(&self.speech_rir.samples)
    }
}

pub(crate) fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

fn distance(a: &Point, b: &Point) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sums delayed, attenuated images of `src` up to `room.max_order` reflections.
///
/// Each image contributes `prod(beta) / (4 pi d)` at sample `round(d / c * fs)`.
pub fn generate_rir(room: &RoomSpec, src: Point, mic: Point, sample_rate: u32) -> Result<AudioSignal> {
    room.validate()?;
    room.check_inside(&src)?;
    room.check_inside(&mic)?;
    let d0 = distance(&src, &mic);
    if d0 == 0.0 {
        return Err(Error::Room(format!("{}: source coincides with microphone", room.id)));
    }
    let fs = sample_rate as f64;
    let order = room.max_order as i64;
    let lattice = (order + 1) / 2 + 1;
    let mut taps: Vec<(usize, f64)> = Vec::new();
    for mx in -lattice..=lattice {
        for my in -lattice..=lattice {
            for mz in -lattice..=lattice {
                let m = [mx, my, mz];
                for parity in 0..8u32 {
                    let q = [(parity & 1) as i64, ((parity >> 1) & 1) as i64, ((parity >> 2) & 1) as i64];
                    let reflections: i64 = (0..3).map(|a| (2 * m[a] - q[a]).abs()).sum();
                    if reflections > order {
                        continue;
                    }
                    let mut gain = 1.0;
                    let mut image = [0.0; 3];
                    for a in 0..3 {
                        image[a] = (1 - 2 * q[a]) as f64 * src[a] + 2.0 * m[a] as f64 * room.dims[a];
                        let low = (m[a] - q[a]).unsigned_abs() as i32;
                        let high = m[a].unsigned_abs() as i32;
                        gain *= room.reflection[2 * a].powi(low) * room.reflection[2 * a + 1].powi(high);
                    }
                    if gain == 0.0 {
                        continue;
                    }
                    let d = distance(&image, &mic);
                    let delay = (d / SPEED_OF_SOUND * fs).round() as usize;
                    taps.push((delay, gain / (4.0 * PI * d)));
                }
            }
        }
    }
    let len = taps.iter().map(|t| t.0).max().unwrap_or(0) + 1;
    let mut h = vec![0.0; len];
    // deterministic accumulation order: sort by (delay, amplitude bits)
    taps.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for (delay, amp) in taps {
        h[delay] += amp;
    }
    Ok(AudioSignal::new(h, sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(beta: f64, order: usize) -> RoomSpec {
        RoomSpec {
            id: "r".into(),
            dims: [5.0, 4.0, 3.0],
            reflection: [beta; 6],
            source_pos: [1.0, 1.0, 1.5],
            noise_pos: [4.0, 3.0, 1.2],
            mic_pos: [2.5, 1.0, 1.5],
            max_order: order,
        }
    }

    #[test]
    fn anechoic_single_tap() {
        let r = room(0.0, 5);
        let h = generate_rir(&r, r.source_pos, r.mic_pos, 8000).unwrap();
        let nonzero: Vec<usize> = (0..h.len()).filter(|&i| h.samples[i] != 0.0).collect();
        assert_eq!(nonzero, vec![35]);
        assert!((h.samples[35] - 1.0 / (4.0 * PI * 1.5)).abs() < 1e-12);
        assert!((h.samples[35] - 0.0531).abs() < 1e-4);
    }

    #[test]
    fn order_zero_ignores_coefficients() {
        let a = room(0.0, 0);
        let b = room(0.9, 0);
        assert_eq!(
            generate_rir(&a, a.source_pos, a.mic_pos, 8000).unwrap(),
            generate_rir(&b, b.source_pos, b.mic_pos, 8000).unwrap()
        );
    }

    #[test]
    fn reverberant_energy_decays() {
        let r = room(0.9, 10);
        let h = generate_rir(&r, r.source_pos, r.mic_pos, 8000).unwrap();
        let n = h.len() / 10;
        let rms = |s: &[f64]| (s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt();
        assert!(rms(&h.samples[h.len() - n..]) < rms(&h.samples[..n]));
    }

    #[test]
    fn first_order_wall_image() {
        // only the x=0 wall reflects
        let mut r = room(0.0, 1);
        r.reflection[0] = 0.5;
        let h = generate_rir(&r, r.source_pos, r.mic_pos, 8000).unwrap();
        // image at x=-1: distance 3.5 m
        let d = 3.5;
        let idx = (d / SPEED_OF_SOUND * 8000.0).round() as usize;
        assert!((h.samples[idx] - 0.5 / (4.0 * PI * d)).abs() < 1e-12);
        assert_eq!(h.samples.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn invalid_rooms() {
        let mut r = room(0.5, 3);
        r.mic_pos = [6.0, 1.0, 1.0];
        assert!(matches!(r.validate(), Err(Error::Room(_))));
        let r = room(0.5, 3);
        assert!(generate_rir(&r, r.mic_pos, r.mic_pos, 8000).is_err());
        let r = room(0.5, 21);
        assert!(r.validate().is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let r = room(0.7, 4);
        let line = r.to_string();
        assert_eq!(RoomSpec::parse_line(&line).unwrap(), r);
        let text = format!("# rooms\n{line}\n\n");
        assert_eq!(RoomSpec::parse_manifest(&text).unwrap().len(), 1);
        assert!(RoomSpec::parse_line("r 1 2 3").is_err());
    }
}
