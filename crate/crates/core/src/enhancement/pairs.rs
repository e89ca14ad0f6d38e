//! Context-window training pairs from frame-aligned corrupted/clean spectrograms.

use crate::error::{Error, Result};
use crate::signal::Spectrogram;

/// Stacked corrupted frames `t-context..=t+context` and the clean frame `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// Indexable supply of training pairs.
pub trait PairSource {
    fn len(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn write_input(&self, index: usize, out: &mut [f64]);
    fn write_target(&self, index: usize, out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PairSource for [TrainPair] {
    fn len(&self) -> usize {
        <[TrainPair]>::len(self)
    }
    fn input_dim(&self) -> usize {
        self.first().map_or(0, |p| p.input.len())
    }
    fn target_dim(&self) -> usize {
        self.first().map_or(0, |p| p.target.len())
    }
    fn write_input(&self, index: usize, out: &mut [f64]) {
        out.copy_from_slice(&self[index].input);
    }
    fn write_target(&self, index: usize, out: &mut [f64]) {
        out.copy_from_slice(&self[index].target);
    }
}

/// Writes the replication-padded context stack around frame `t` into `out`.
pub fn stack_context(spec: &Spectrogram, t: usize, context: usize, out: &mut [f64]) {
    let b = spec.bins;
    let last = spec.frames as isize - 1;
    for (k, off) in (-(context as isize)..=context as isize).enumerate() {
        let src = (t as isize + off).clamp(0, last) as usize;
        out[k * b..(k + 1) * b].copy_from_slice(spec.frame(src));
    }
}

fn check_aligned(corrupted: &Spectrogram, clean: &Spectrogram) -> Result<()> {
    if corrupted.frames != clean.frames || corrupted.bins != clean.bins {
        return Err(Error::Dimension(format!(
            "corrupted {}x{} vs clean {}x{}",
            corrupted.frames, corrupted.bins, clean.frames, clean.bins
        )));
    }
    Ok(())
}

/// Materializes one pair per frame.
pub fn build_pairs(corrupted: &Spectrogram, clean: &Spectrogram, context: usize) -> Result<Vec<TrainPair>> {
    check_aligned(corrupted, clean)?;
    let dim = (2 * context + 1) * corrupted.bins;
    Ok((0..corrupted.frames)
        .map(|t| {
            let mut input = vec![0.0; dim];
            stack_context(corrupted, t, context, &mut input);
            TrainPair {
                input,
                target: clean.frame(t).to_vec(),
            }
        })
        .collect())
}

/// Lazily stacked pairs over many utterances; avoids holding every context window.
#[derive(Debug, Clone, Default)]
pub struct SpectralPairs {
    utterances: Vec<(Spectrogram, Spectrogram)>,
    index: Vec<(u32, u32)>,
    context: usize,
    bins: usize,
}

impl SpectralPairs {
    pub fn new(context: usize) -> Self {
        Self {
            context,
            ..Default::default()
        }
    }

    pub fn push(&mut self, corrupted: Spectrogram, clean: Spectrogram) -> Result<()> {
        check_aligned(&corrupted, &clean)?;
        if self.utterances.is_empty() {
            self.bins = clean.bins;
        } else if clean.bins != self.bins {
            return Err(Error::Dimension(format!("{} bins, expected {}", clean.bins, self.bins)));
        }
        let u = self.utterances.len() as u32;
        self.index.extend((0..clean.frames as u32).map(|t| (u, t)));
        self.utterances.push((corrupted, clean));
        Ok(())
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn utterance_count(&self) -> usize {
        self.utterances.len()
    }
}

impl PairSource for SpectralPairs {
    fn len(&self) -> usize {
        self.index.len()
    }
    fn input_dim(&self) -> usize {
        (2 * self.context + 1) * self.bins
    }
    fn target_dim(&self) -> usize {
        self.bins
    }
    fn write_input(&self, index: usize, out: &mut [f64]) {
        let (u, t) = self.index[index];
        stack_context(&self.utterances[u as usize].0, t as usize, self.context, out);
    }
    fn write_target(&self, index: usize, out: &mut [f64]) {
        let (u, t) = self.index[index];
        out.copy_from_slice(self.utterances[u as usize].1.frame(t as usize));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::FrameGeometry;

    fn spec(frames: usize, offset: f64) -> Spectrogram {
        Spectrogram {
            log_mag: (0..frames * 129).map(|i| (i / 129) as f64 + offset).collect(),
            phase: vec![0.0; frames * 129],
            frames,
            bins: 129,
            geometry: FrameGeometry::default(),
            sample_rate: 8000,
        }
    }

    #[test]
    fn pair_count_and_dims() {
        let pairs = build_pairs(&spec(100, 0.0), &spec(100, 0.5), 15).unwrap();
        assert_eq!(pairs.len(), 100);
        assert!(pairs.iter().all(|p| p.input.len() == 3999 && p.target.len() == 129));
        // frame 0 replicates itself for the left context
        assert_eq!(pairs[0].input[0], 0.0);
        assert_eq!(pairs[0].input[15 * 129], 0.0);
        assert_eq!(pairs[0].input[16 * 129], 1.0);
        assert_eq!(pairs[99].input[30 * 129], 99.0);
    }

    #[test]
    fn single_frame_replicated() {
        let s = spec(1, 3.0);
        let pairs = build_pairs(&s, &s, 15).unwrap();
        assert_eq!(pairs.len(), 1);
        for k in 0..31 {
            assert_eq!(&pairs[0].input[k * 129..(k + 1) * 129], s.frame(0));
        }
    }

    #[test]
    fn identical_inputs_align_with_targets() {
        let s = spec(20, 0.0);
        for p in build_pairs(&s, &s, 15).unwrap() {
            assert_eq!(&p.input[15 * 129..16 * 129], p.target.as_slice());
        }
    }

    #[test]
    fn mismatch_rejected() {
        assert!(matches!(build_pairs(&spec(10, 0.0), &spec(11, 0.0), 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn lazy_matches_materialized() {
        let (a, b) = (spec(12, 0.0), spec(12, 0.25));
        let eager = build_pairs(&a, &b, 3).unwrap();
        let mut lazy = SpectralPairs::new(3);
        lazy.push(a, b).unwrap();
        let mut buf = vec![0.0; lazy.input_dim()];
        let mut tb = vec![0.0; 129];
        for (i, p) in eager.iter().enumerate() {
            lazy.write_input(i, &mut buf);
            lazy.write_target(i, &mut tb);
            assert_eq!(buf, p.input);
            assert_eq!(tb, p.target);
        }
    }
}
