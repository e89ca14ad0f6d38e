//! Energy-based voice activity detection.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

/// Frames whose mean-square level falls below this (dB re full scale) are never speech.
pub const ABSOLUTE_FLOOR_DB: f64 = -100.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VadConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub margin_db: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            frame_len: 200,
            hop: 80,
            margin_db: 30.0,
        }
    }
}

/// Per-frame speech flags with the framing that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VadMask {
    pub flags: Vec<bool>,
    pub frame_len: usize,
    pub hop: usize,
}

impl VadMask {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn speech_frames(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Sample range `[start, end)` of frame `t`, clipped to `len`.
    pub fn frame_range(&self, t: usize, len: usize) -> std::ops::Range<usize> {
        let start = (t * self.hop).min(len);
        let end = (t * self.hop + self.frame_len).min(len);
        start..end
    }

    /// Run-length text form: `id F12 T40 F3`.
    pub fn to_rle_line(&self, id: &str) -> String {
        let mut out = String::from(id);
        let mut i = 0;
        while i < self.flags.len() {
            let v = self.flags[i];
            let mut j = i;
            while j < self.flags.len() && self.flags[j] == v {
                j += 1;
            }
            write!(out, " {}{}", if v { 'T' } else { 'F' }, j - i).unwrap();
            i = j;
        }
        out
    }

    pub fn from_rle_line(line: &str, frame_len: usize, hop: usize) -> Result<(String, VadMask)> {
        let mut parts = line.split_whitespace();
        let id = parts
            .next()
            .ok_or_else(|| Error::Parse("empty mask line".into()))?
            .to_string();
        let mut flags = Vec::new();
        for tok in parts {
            let (flag, count) = tok.split_at(1);
            let v = match flag {
                "T" => true,
                "F" => false,
                _ => return Err(Error::Parse(format!("bad run token {tok}"))),
            };
            let n: usize = count
                .parse()
                .map_err(|_| Error::Parse(format!("bad run length {tok}")))?;
            flags.extend(std::iter::repeat_n(v, n));
        }
        Ok((
            id,
            VadMask {
                flags,
                frame_len,
                hop,
            },
        ))
    }
}

/// Per-frame mean-square level in dB (frames laid out as in `stft`).
pub fn frame_levels_db(signal: &AudioSignal, frame_len: usize, hop: usize) -> Vec<f64> {
    let frames = if signal.len() <= frame_len {
        1
    } else {
        1 + (signal.len() - frame_len) / hop
    };
    (0..frames)
        .map(|t| {
            let start = t * hop;
            let end = (start + frame_len).min(signal.len());
            let e: f64 = signal.samples[start.min(end)..end].iter().map(|x| x * x).sum();
            let ms = e / frame_len as f64;
            if ms > 0.0 {
                10.0 * ms.log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// A frame is speech iff its level is within `margin_db` of the loudest frame and above
/// [`ABSOLUTE_FLOOR_DB`].
pub fn energy_vad(signal: &AudioSignal, config: &VadConfig) -> Result<VadMask> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    if config.hop == 0 || config.frame_len == 0 {
        return Err(Error::Geometry("vad frame_len and hop must be positive".into()));
    }
    let levels = frame_levels_db(signal, config.frame_len, config.hop);
    let max = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = max - config.margin_db;
    Ok(VadMask {
        flags: levels
            .iter()
            .map(|&l| l >= threshold && l >= ABSOLUTE_FLOOR_DB)
            .collect(),
        frame_len: config.frame_len,
        hop: config.hop,
    })
}
