use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::signal::{hamming, AudioSignal, FrameGeometry, RealFft};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub geometry: FrameGeometry,
    pub n_filters: usize,
    pub n_ceps: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub preemphasis: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            geometry: FrameGeometry::default(),
            n_filters: 24,
            n_ceps: 20,
            low_hz: 120.0,
            high_hz: 3800.0,
            preemphasis: 0.97,
        }
    }
}

/// Filterbank energies are floored here before the log.
pub const ENERGY_FLOOR: f64 = 1e-10;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over the power spectrum bins, `n_filters x bins`.
pub fn mel_filterbank(config: &MfccConfig, sample_rate: u32) -> DMatrix<f64> {
    let bins = config.geometry.bins();
    let fft = config.geometry.fft_size as f64;
    let (lo, hi) = (hz_to_mel(config.low_hz), hz_to_mel(config.high_hz));
    let edges: Vec<f64> = (0..config.n_filters + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.n_filters + 1) as f64))
        .collect();
    DMatrix::from_fn(config.n_filters, bins, |m, k| {
        let f = k as f64 * sample_rate as f64 / fft;
        let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
        if f > l && f <= c {
            (f - l) / (c - l)
        } else if f > c && f < r {
            (r - f) / (r - c)
        } else {
            0.0
        }
    })
}

/// Orthonormal DCT-II basis, `n_out x n_in`.
pub fn dct_matrix(n_in: usize, n_out: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_out, n_in, |k, n| {
        let scale = if k == 0 {
            (1.0 / n_in as f64).sqrt()
        } else {
            (2.0 / n_in as f64).sqrt()
        };
        scale * (PI * k as f64 * (n as f64 + 0.5) / n_in as f64).cos()
    })
}

/// Front-end state reused across utterances.
pub struct MfccExtractor {
    config: MfccConfig,
    sample_rate: u32,
    filterbank: DMatrix<f64>,
    dct: DMatrix<f64>,
    window: Vec<f64>,
    fft: RealFft,
}

impl MfccExtractor {
    pub fn new(config: MfccConfig, sample_rate: u32) -> Result<Self> {
        config.geometry.validate()?;
        if config.n_ceps > config.n_filters {
            return Err(Error::Config("more cepstra than filters".into()));
        }
        if !(config.high_hz <= sample_rate as f64 / 2.0 && config.low_hz < config.high_hz) {
            return Err(Error::Config("invalid filterbank band".into()));
        }
        Ok(Self {
            filterbank: mel_filterbank(&config, sample_rate),
            dct: dct_matrix(config.n_filters, config.n_ceps),
            window: hamming(config.geometry.frame_len),
            fft: RealFft::new(config.geometry.fft_size),
            sample_rate,
            config,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    /// Mel filterbank energies, `T x n_filters` (unfloored).
    pub fn filterbank_energies(&self, signal: &AudioSignal) -> Result<DMatrix<f64>> {
        if signal.sample_rate != self.sample_rate {
            return Err(Error::SampleRateMismatch(signal.sample_rate, self.sample_rate));
        }
        let g = self.config.geometry;
        if signal.len() < g.frame_len {
            return Err(Error::Precondition(format!(
                "signal of {} samples is shorter than one frame",
                signal.len()
            )));
        }
        let x = &signal.samples;
        let a = self.config.preemphasis;
        let emphasized: Vec<f64> = (0..x.len())
            .map(|i| if i == 0 { x[0] } else { x[i] - a * x[i - 1] })
            .collect();
        let frames = g.frame_count(x.len());
        let bins = g.bins();
        let mut out = DMatrix::zeros(frames, self.config.n_filters);
        let mut buf = vec![0.0; g.frame_len];
        let mut power = nalgebra::DVector::zeros(bins);
        for t in 0..frames {
            let start = t * g.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = emphasized[start + i] * self.window[i];
            }
            let spec = self.fft.forward(&buf);
            for k in 0..bins {
                power[k] = spec[k].norm_sqr();
            }
            let e = &self.filterbank * &power;
            out.row_mut(t).copy_from(&e.transpose());
        }
        Ok(out)
    }

    /// Cepstra from log filterbank energies (`T x n_filters`), `T x n_ceps`.
    pub fn cepstra_from_log_mel(&self, log_mel: &DMatrix<f64>) -> DMatrix<f64> {
        log_mel * self.dct.transpose()
    }

    /// Static coefficients c0..c{n_ceps-1}, `T x n_ceps`.
    pub fn mfcc(&self, signal: &AudioSignal) -> Result<DMatrix<f64>> {
        let mut e = self.filterbank_energies(signal)?;
        e.apply(|v| *v = v.max(ENERGY_FLOOR).ln());
        Ok(self.cepstra_from_log_mel(&e))
    }
}
