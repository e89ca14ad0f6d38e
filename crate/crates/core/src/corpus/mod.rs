//! Synthetic multi-speaker corpus, utterance lists and desk-scale noise/room pools.

pub mod rooms;
pub mod voice;

pub use rooms::{measured_style_pair, random_room, sabine_t60};
pub use voice::{synth_utterance, VoiceProfile};

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;

use crate::corruption::{
    synth_babble, synth_hum, synth_shaped_white, NoiseCategory, NoisePool, NoiseSample, RirEntry, RirPool, RoomSpec,
    SpectralShape, Split,
};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::{read_archive, write_archive, MatrixArchive};
use crate::signal::{read_wav_at, write_wav, AudioSignal};
use crate::util::{derive_seed, rng_for};
use crate::vad::VadConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub signal: AudioSignal,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    pub fn speakers(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.utterances.iter().map(|u| u.speaker.as_str()).collect();
        set.into_iter().collect()
    }

    /// Writes `<id>.wav` files and `utt2spk.txt`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut list = String::new();
        for u in &self.utterances {
            write_wav(dir.join(format!("{}.wav", u.id)), &u.signal)?;
            list.push_str(&format!("{} {}\n", u.id, u.speaker));
        }
        let path = dir.join("utt2spk.txt");
        std::fs::write(&path, list).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path, sample_rate: u32) -> Result<Self> {
        let path = dir.join("utt2spk.txt");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut utterances = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let (Some(id), Some(spk), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("utt2spk line: {line}")));
            };
            utterances.push(Utterance {
                id: id.to_string(),
                speaker: spk.to_string(),
                signal: read_wav_at(dir.join(format!("{id}.wav")), sample_rate)?,
            });
        }
        Ok(Self { utterances })
    }
}

pub const BUNDLE_AUDIO: &str = "audio.ark";
pub const BUNDLE_SPEAKERS: &str = "utt2spk.txt";

impl Corpus {
    /// Lossless on-disk form: every waveform as a `1 x N` record of `audio.ark`, plus `utt2spk.txt`.
    pub fn save_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let archive = MatrixArchive {
            records: self
                .utterances
                .iter()
                .map(|u| (u.id.clone(), DMatrix::from_row_slice(1, u.signal.len(), &u.signal.samples)))
                .collect(),
        };
        write_archive(&dir.join(BUNDLE_AUDIO), &archive)?;
        let list: String = self.utterances.iter().map(|u| format!("{} {}\n", u.id, u.speaker)).collect();
        let path = dir.join(BUNDLE_SPEAKERS);
        std::fs::write(&path, list).map_err(|e| Error::io(&path, e))
    }

    pub fn load_bundle(dir: &Path, sample_rate: u32) -> Result<Self> {
        let archive = read_archive(&dir.join(BUNDLE_AUDIO))?;
        let path = dir.join(BUNDLE_SPEAKERS);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let speakers: Vec<(&str, &str)> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_once(' ').ok_or_else(|| Error::Parse(format!("utt2spk line: {l}"))))
            .collect::<Result<_>>()?;
        if speakers.len() != archive.records.len() {
            return Err(Error::Format(format!("{}: audio and speaker lists differ in length", dir.display())));
        }
        let utterances = archive
            .records
            .into_iter()
            .zip(speakers)
            .map(|((id, m), (sid, spk))| {
                if id != sid || m.nrows() != 1 {
                    return Err(Error::Format(format!("{}: malformed record {id}", dir.display())));
                }
                Ok(Utterance {
                    signal: AudioSignal::new(m.as_slice().to_vec(), sample_rate),
                    id,
                    speaker: spk.trim().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { utterances })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub prefix: String,
    pub speakers: usize,
    pub utterances_per_speaker: usize,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            prefix: "spk".into(),
            speakers: 20,
            utterances_per_speaker: 8,
            min_duration_s: 2.0,
            max_duration_s: 3.0,
        }
    }
}

/// Speaker `i` of a spec is `<prefix><i:03>`; utterance `j` of it is `<speaker>_u<j:02>`.
/// Every voice and utterance is seeded from its own identifier.
pub fn synth_corpus(spec: &CorpusSpec, seed: u64, sample_rate: u32) -> Corpus {
    let mut utterances = Vec::with_capacity(spec.speakers * spec.utterances_per_speaker);
    for s in 0..spec.speakers {
        let speaker = format!("{}{s:03}", spec.prefix);
        let profile = VoiceProfile::random(&mut rng_for(seed, &speaker));
        for u in 0..spec.utterances_per_speaker {
            let id = format!("{speaker}_u{u:02}");
            let mut rng = rng_for(seed, &id);
            let dur = if spec.max_duration_s > spec.min_duration_s {
                rng.random_range(spec.min_duration_s..spec.max_duration_s)
            } else {
                spec.min_duration_s
            };
            utterances.push(Utterance {
                signal: synth_utterance(&profile, dur, sample_rate, &mut rng),
                id,
                speaker: speaker.clone(),
            });
        }
    }
    Corpus { utterances }
}

/// One line of a training list: `utterance_id speaker_id condition_tag`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListEntry {
    pub utt: String,
    pub speaker: String,
    pub condition: String,
}

pub fn write_list(entries: &[ListEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("{} {} {}\n", e.utt, e.speaker, e.condition))
        .collect()
}

pub fn parse_list(text: &str) -> Result<Vec<ListEntry>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(Error::Parse(format!("training list line: {line}")));
            }
            Ok(ListEntry {
                utt: t[0].into(),
                speaker: t[1].into(),
                condition: t[2].into(),
            })
        })
        .collect()
}

/// Sizes of the desk-scale noise and room pools.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PoolSpec {
    pub noises: [usize; 3],
    pub rooms: [usize; 3],
    pub noise_duration_s: f64,
    /// Talkers per babble sample.
    pub babble_talkers: usize,
    /// Talkers available to each split's babble.
    pub babble_pool: usize,
    pub max_order: usize,
}

impl Default for PoolSpec {
    fn default() -> Self {
        Self {
            noises: [20, 4, 4],
            rooms: [30, 0, 6],
            noise_duration_s: 8.0,
            babble_talkers: 6,
            babble_pool: 10,
            max_order: 8,
        }
    }
}

const SPLITS: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

fn random_shape(rng: &mut impl Rng) -> SpectralShape {
    let mut points = SpectralShape::tilt(rng.random_range(-6.0..3.0)).points;
    for p in &mut points {
        p.1 += rng.random_range(-6.0..6.0);
    }
    SpectralShape { points }
}

/// Noise pool cycling through shaped white, shaped white plus hum, and babble.
/// Babble talkers are synthesized per split, so no voice is shared across splits
/// or with any speaker corpus.
pub fn synth_noise_pool(spec: &PoolSpec, seed: u64, sample_rate: u32) -> Result<NoisePool> {
    let len = (spec.noise_duration_s * sample_rate as f64).round() as usize;
    let vad = VadConfig::default();
    let mut samples = Vec::new();
    for (split, &count) in SPLITS.iter().zip(&spec.noises) {
        let talkers = synth_corpus(
            &CorpusSpec {
                prefix: format!("babble-{split}-"),
                speakers: spec.babble_pool,
                utterances_per_speaker: 1,
                min_duration_s: 3.0,
                max_duration_s: 4.0,
            },
            seed,
            sample_rate,
        );
        let talk: Vec<AudioSignal> = talkers.utterances.into_iter().map(|u| u.signal).collect();
        for i in 0..count {
            let id = format!("noise-{split}-{i:02}");
            let mut rng = rng_for(seed, &id);
            let nseed = derive_seed(seed, &format!("{id}/signal"));
            let (category, signal) = match i % 3 {
                0 => (
                    NoiseCategory::ShapedWhite,
                    synth_shaped_white(&random_shape(&mut rng), spec.noise_duration_s, sample_rate, nseed)?,
                ),
                1 => {
                    let white = synth_shaped_white(&random_shape(&mut rng), spec.noise_duration_s, sample_rate, nseed)?;
                    let f = if rng.random_bool(0.5) { 50.0 } else { 100.0 };
                    let hum = synth_hum(f, spec.noise_duration_s, sample_rate)?;
                    let mix = white.add(&hum.scaled(rng.random_range(0.1..0.5)))?;
                    (NoiseCategory::Hum, mix)
                }
                _ => {
                    let k = spec.babble_talkers.min(talk.len());
                    (NoiseCategory::Babble, synth_babble(&talk, k, len, &vad, nseed)?)
                }
            };
            samples.push(NoiseSample {
                id,
                signal,
                category,
                split: *split,
            });
        }
    }
    let pool = NoisePool { samples };
    pool.check_disjoint()?;
    Ok(pool)
}

/// Room specs per split, named `<prefix>-<split>-<i>`.
pub fn synth_rooms(prefix: &str, spec: &PoolSpec, seed: u64) -> Vec<(RoomSpec, Split)> {
    let mut out = Vec::new();
    for (split, &count) in SPLITS.iter().zip(&spec.rooms) {
        for i in 0..count {
            let id = format!("{prefix}-{split}-{i:02}");
            let room = random_room(&id, spec.max_order, &mut rng_for(seed, &id));
            out.push((room, *split));
        }
    }
    out
}

/// Image-source ("artificial") pool.
pub fn synth_artificial_pool(spec: &PoolSpec, seed: u64, sample_rate: u32) -> Result<RirPool> {
    RirPool::from_rooms(&synth_rooms("air", spec, seed), sample_rate)
}

/// Diffuse-tail ("real") pool, energy-normalized like pools loaded from disk.
pub fn synth_real_pool(spec: &PoolSpec, seed: u64, sample_rate: u32) -> Result<RirPool> {
    let entries = synth_rooms("rir", spec, seed)
        .into_iter()
        .map(|(room, split)| {
            let mut rng = rng_for(seed, &format!("{}/tail", room.id));
            Ok(RirEntry {
                pair: measured_style_pair(&room, sample_rate, &mut rng)?.energy_normalized(),
                split,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pool = RirPool { entries };
    pool.check_disjoint()?;
    Ok(pool)
}
