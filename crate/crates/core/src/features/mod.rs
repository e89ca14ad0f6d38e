//! MFCC front-end: static cepstra, short-time mean/variance normalization, deltas and
//! VAD frame dropping.

mod archive;
mod mfcc;

pub use archive::{read_archive, write_archive, MatrixArchive};
pub use mfcc::{dct_matrix, mel_filterbank, MfccConfig, MfccExtractor, ENERGY_FLOOR};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::signal::AudioSignal;
use crate::vad::{energy_vad, VadConfig, VadMask};

pub const STMVN_STD_FLOOR: f64 = 1e-6;

/// Normalizes each frame by the mean and std over a centered window of `window_frames`
/// frames (clipped at the utterance edges).
pub fn stmvn(features: &DMatrix<f64>, window_frames: usize) -> DMatrix<f64> {
    let (t_len, dim) = features.shape();
    if t_len == 0 {
        return features.clone();
    }
    let half = window_frames / 2;
    let mut out = DMatrix::zeros(t_len, dim);
    let mut sum = vec![0.0; t_len + 1];
    let mut sq = vec![0.0; t_len + 1];
    for d in 0..dim {
        let col = features.column(d);
        // center first so prefix sums stay well conditioned
        let c = col.mean();
        for t in 0..t_len {
            let v = col[t] - c;
            sum[t + 1] = sum[t] + v;
            sq[t + 1] = sq[t] + v * v;
        }
        for t in 0..t_len {
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(t_len - 1) + 1;
            let n = (hi - lo) as f64;
            let mean = (sum[hi] - sum[lo]) / n;
            let var = ((sq[hi] - sq[lo]) / n - mean * mean).max(0.0);
            out[(t, d)] = (col[t] - c - mean) / var.sqrt().max(STMVN_STD_FLOOR);
        }
    }
    out
}

/// Window length in frames for a duration in seconds at the given hop.
pub fn window_frames(seconds: f64, hop: usize, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64 / hop as f64).round() as usize
}

fn regression_delta(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (t_len, dim) = x.shape();
    let last = t_len as isize - 1;
    let at = |t: isize, d: usize| x[(t.clamp(0, last) as usize, d)];
    DMatrix::from_fn(t_len, dim, |t, d| {
        let t = t as isize;
        (at(t + 1, d) - at(t - 1, d) + 2.0 * (at(t + 2, d) - at(t - 2, d))) / 10.0
    })
}

/// Appends ±2-frame regression deltas and double deltas: `T x 3D`.
pub fn deltas(features: &DMatrix<f64>) -> DMatrix<f64> {
    let (t_len, dim) = features.shape();
    let d1 = regression_delta(features);
    let d2 = regression_delta(&d1);
    let mut out = DMatrix::zeros(t_len, 3 * dim);
    out.columns_mut(0, dim).copy_from(features);
    out.columns_mut(dim, dim).copy_from(&d1);
    out.columns_mut(2 * dim, dim).copy_from(&d2);
    out
}

/// Keeps the rows whose mask flag is set.
pub fn drop_silence(features: &DMatrix<f64>, mask: &VadMask, utt_id: &str) -> Result<DMatrix<f64>> {
    if mask.len() != features.nrows() {
        return Err(Error::Dimension(format!(
            "mask of {} frames for {} feature rows",
            mask.len(),
            features.nrows()
        )));
    }
    let keep: Vec<usize> = (0..mask.len()).filter(|&t| mask.flags[t]).collect();
    if keep.is_empty() {
        return Err(Error::EmptyUtterance(utt_id.to_string()));
    }
    Ok(features.select_rows(&keep))
}

/// Complete front-end: mfcc, stmvn, deltas, drop_silence.
pub struct FeaturePipeline {
    pub extractor: MfccExtractor,
    pub vad: VadConfig,
    pub stmvn_window_s: f64,
}

impl FeaturePipeline {
    pub fn new(config: MfccConfig, vad: VadConfig, sample_rate: u32) -> Result<Self> {
        Ok(Self {
            extractor: MfccExtractor::new(config, sample_rate)?,
            vad,
            stmvn_window_s: 3.0,
        })
    }

    pub fn default_8k() -> Self {
        Self::new(MfccConfig::default(), VadConfig::default(), 8000).expect("default config is valid")
    }

    /// Features before frame dropping, `T x 60`.
    pub fn dense(&self, signal: &AudioSignal) -> Result<DMatrix<f64>> {
        let c = self.extractor.mfcc(signal)?;
        let g = self.extractor.config().geometry;
        let w = window_frames(self.stmvn_window_s, g.hop, signal.sample_rate);
        Ok(deltas(&stmvn(&c, w)))
    }

    /// Features of speech frames, with the mask taken from `signal` itself.
    pub fn extract(&self, signal: &AudioSignal, utt_id: &str) -> Result<DMatrix<f64>> {
        let mask = energy_vad(signal, &self.vad)?;
        self.extract_masked(signal, &mask, utt_id)
    }

    /// Features of the frames flagged in `mask`, typically the clean source's mask for a corrupted copy.
    pub fn extract_masked(&self, signal: &AudioSignal, mask: &VadMask, utt_id: &str) -> Result<DMatrix<f64>> {
        drop_silence(&self.dense(signal)?, mask, utt_id)
    }
}
