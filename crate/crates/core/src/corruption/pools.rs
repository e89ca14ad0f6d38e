//! Noise and room pools with train/dev/test splits, loadable from plain-text manifests.

use std::collections::HashSet;
use std::path::Path;

use super::noise::{NoiseCategory, NoiseSample, Split};
use super::rir::{RirPair, RoomSpec};
use crate::error::{Error, Result};
use crate::signal::{read_wav_at, write_wav};

#[derive(Debug, Clone, Default)]
pub struct NoisePool {
    pub samples: Vec<NoiseSample>,
}

impl NoisePool {
    pub fn split(&self, split: Split) -> Vec<&NoiseSample> {
        self.samples.iter().filter(|s| s.split == split).collect()
    }

    pub fn get(&self, id: &str) -> Option<&NoiseSample> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Writes every sample as WAV plus a `noises.txt` manifest (`id category split file`).
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::new();
        for s in &self.samples {
            let file = format!("{}.wav", s.id);
            write_wav(dir.join(&file), &s.signal)?;
            manifest.push_str(&format!("{} {} {} {}\n", s.id, s.category, s.split, file));
        }
        let path = dir.join("noises.txt");
        std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path, sample_rate: u32) -> Result<Self> {
        let path = dir.join("noises.txt");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut samples = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(Error::Parse(format!("noise manifest line: {line}")));
            }
            let category: NoiseCategory = t[1].parse()?;
            let split: Split = t[2].parse()?;
            samples.push(NoiseSample {
                id: t[0].to_string(),
                signal: read_wav_at(dir.join(t[3]), sample_rate)?,
                category,
                split,
            });
        }
        let pool = NoisePool { samples };
        pool.check_disjoint()?;
        Ok(pool)
    }

    /// Fails if any identifier appears in more than one split.
    pub fn check_disjoint(&self) -> Result<()> {
        check_disjoint(self.samples.iter().map(|s| (s.id.as_str(), s.split)))
    }
}

#[derive(Debug, Clone)]
pub struct RirEntry {
    pub pair: RirPair,
    pub split: Split,
}

#[derive(Debug, Clone, Default)]
pub struct RirPool {
    pub entries: Vec<RirEntry>,
}

impl RirPool {
    pub fn split(&self, split: Split) -> Vec<&RirPair> {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| &e.pair)
            .collect()
    }

    pub fn get(&self, room_id: &str) -> Option<&RirPair> {
        self.entries
            .iter()
            .find(|e| e.pair.room_id == room_id)
            .map(|e| &e.pair)
    }

    /// Builds an image-source pool from room manifests given per split.
    pub fn from_rooms(rooms: &[(RoomSpec, Split)], sample_rate: u32) -> Result<Self> {
        let entries = rooms
            .iter()
            .map(|(room, split)| {
                Ok(RirEntry {
                    pair: room.rir_pair(sample_rate)?.energy_normalized(),
                    split: *split,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let pool = RirPool { entries };
        pool.check_disjoint()?;
        Ok(pool)
    }

    /// Writes measured-style pairs as WAV plus `rirs.txt` (`room_id split speech.wav noise.wav`).
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::new();
        for e in &self.entries {
            let id = &e.pair.room_id;
            // shared peak normalization keeps the speech/noise level relation
            let peak = e.pair.speech_rir.peak().max(e.pair.noise_rir.peak());
            let g = if peak > 0.0 { 0.9 / peak } else { 1.0 };
            let (s, n) = (format!("{id}_speech.wav"), format!("{id}_noise.wav"));
            write_wav(dir.join(&s), &e.pair.speech_rir.scaled(g))?;
            write_wav(dir.join(&n), &e.pair.noise_rir.scaled(g))?;
            manifest.push_str(&format!("{id} {} {s} {n}\n", e.split));
        }
        let path = dir.join("rirs.txt");
        std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    /// Loads RIR pairs from WAV files, e.g. measured responses. Pairs are energy-normalized.
    pub fn load(dir: &Path, sample_rate: u32) -> Result<Self> {
        let path = dir.join("rirs.txt");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(Error::Parse(format!("rir manifest line: {line}")));
            }
            let pair = RirPair::new(
                t[0],
                read_wav_at(dir.join(t[2]), sample_rate)?,
                read_wav_at(dir.join(t[3]), sample_rate)?,
            )?;
            entries.push(RirEntry {
                pair: pair.energy_normalized(),
                split: t[1].parse()?,
            });
        }
        let pool = RirPool { entries };
        pool.check_disjoint()?;
        Ok(pool)
    }

    pub fn check_disjoint(&self) -> Result<()> {
        check_disjoint(self.entries.iter().map(|e| (e.pair.room_id.as_str(), e.split)))
    }
}

fn check_disjoint<'a>(items: impl Iterator<Item = (&'a str, Split)>) -> Result<()> {
    let mut seen: std::collections::HashMap<&str, Split> = Default::default();
    for (id, split) in items {
        if let Some(prev) = seen.insert(id, split) {
            return Err(Error::Precondition(if prev == split {
                format!("duplicate pool id {id}")
            } else {
                format!("pool id {id} appears in both {prev} and {split}")
            }));
        }
    }
    Ok(())
}

/// True when no identifier is shared between the two sets.
pub fn disjoint_ids<'a>(a: impl IntoIterator<Item = &'a str>, b: impl IntoIterator<Item = &'a str>) -> bool {
    let a: HashSet<&str> = a.into_iter().collect();
    b.into_iter().all(|id| !a.contains(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::AudioSignal;

    fn noise(id: &str, split: Split) -> NoiseSample {
        NoiseSample {
            id: id.into(),
            signal: AudioSignal::new(vec![0.1, -0.2, 0.3], 8000),
            category: NoiseCategory::External,
            split,
        }
    }

    #[test]
    fn overlapping_ids_rejected() {
        let pool = NoisePool {
            samples: vec![noise("a", Split::Train), noise("a", Split::Test)],
        };
        assert!(pool.check_disjoint().is_err());
        let pool = NoisePool {
            samples: vec![noise("a", Split::Train), noise("b", Split::Test)],
        };
        assert!(pool.check_disjoint().is_ok());
        assert!(disjoint_ids(["a"], ["b"]));
        assert!(!disjoint_ids(["a", "b"], ["b"]));
    }

    #[test]
    fn noise_pool_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pool = NoisePool {
            samples: vec![noise("a", Split::Train), noise("b", Split::Dev)],
        };
        pool.save(dir.path()).unwrap();
        let back = NoisePool::load(dir.path(), 8000).unwrap();
        assert_eq!(back.samples.len(), 2);
        assert_eq!(back.split(Split::Dev)[0].id, "b");
    }

    #[test]
    fn rir_pool_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let room = RoomSpec {
            id: "room1".into(),
            dims: [4.0, 3.0, 2.5],
            reflection: [0.6; 6],
            source_pos: [1.0, 1.0, 1.2],
            noise_pos: [3.0, 2.0, 1.0],
            mic_pos: [2.0, 1.5, 1.2],
            max_order: 3,
        };
        let pool = RirPool::from_rooms(&[(room, Split::Test)], 8000).unwrap();
        pool.save(dir.path()).unwrap();
        let back = RirPool::load(dir.path(), 8000).unwrap();
        let a = &pool.entries[0].pair;
        let b = &back.entries[0].pair;
        assert!((b.speech_rir.energy() - 1.0).abs() < 1e-9);
        assert_eq!(a.speech_delay(), b.speech_delay());
        assert_eq!(back.split(Split::Test).len(), 1);
    }
}

/// Which room pool a corruption draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverbSource {
    None,
    RealPool,
    ArtificialPool,
}

/// The noise pool and both room pools; room ids are unique across the two room pools.
#[derive(Debug, Clone, Default)]
pub struct PoolSet {
    pub noise: NoisePool,
    pub real: RirPool,
    pub artificial: RirPool,
}

impl PoolSet {
    pub fn rooms(&self, source: ReverbSource, split: Split) -> Vec<&RirPair> {
        match source {
            ReverbSource::None => Vec::new(),
            ReverbSource::RealPool => self.real.split(split),
            ReverbSource::ArtificialPool => self.artificial.split(split),
        }
    }

    pub fn room(&self, id: &str) -> Option<&RirPair> {
        self.real.get(id).or_else(|| self.artificial.get(id))
    }

    pub fn noise(&self, id: &str) -> Option<&NoiseSample> {
        self.noise.get(id)
    }

    pub fn check_disjoint(&self) -> Result<()> {
        self.noise.check_disjoint()?;
        let ids = |p: &RirPool| p.entries.iter().map(|e| e.pair.room_id.clone()).collect::<Vec<_>>();
        let (r, a) = (ids(&self.real), ids(&self.artificial));
        if !disjoint_ids(r.iter().map(String::as_str), a.iter().map(String::as_str)) {
            return Err(Error::Precondition("real and artificial room pools share an id".into()));
        }
        self.real.check_disjoint()?;
        self.artificial.check_disjoint()
    }
}
