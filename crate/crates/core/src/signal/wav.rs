use std::path::Path;

use super::AudioSignal;
use crate::error::{Error, Result};

const PCM16_SCALE: f64 = 32768.0;

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io)
            if io.kind() == std::io::ErrorKind::UnexpectedEof
                || io.to_string().contains("enough bytes") =>
        {
            Error::TruncatedWav(format!("{}: {io}", path.display()))
        }
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::FormatError(msg) => Error::TruncatedWav(format!("{}: {msg}", path.display())),
        hound::Error::UnfinishedSample => {
            Error::TruncatedWav(format!("{}: unfinished sample", path.display()))
        }
        other => Error::UnsupportedEncoding(format!("{}: {other}", path.display())),
    }
}

/// Reads a 16-bit PCM mono WAV file at its native sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "{}: {:?} {} bits",
            path.display(),
            spec.sample_format,
            spec.bits_per_sample
        )));
    }
    if spec.channels != 1 {
        return Err(Error::ChannelCount(spec.channels));
    }
    let expected = reader.len() as usize;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| map_hound(path, e))?;
    if samples.len() != expected {
        return Err(Error::TruncatedWav(format!(
            "{}: expected {expected} samples, got {}",
            path.display(),
            samples.len()
        )));
    }
    Ok(AudioSignal::new(samples, spec.sample_rate))
}

/// Reads a WAV file and resamples it to `sample_rate` by linear interpolation.
pub fn read_wav_at(path: impl AsRef<Path>, sample_rate: u32) -> Result<AudioSignal> {
    let sig = read_wav(path)?;
    Ok(resample_linear(&sig, sample_rate))
}

/// Writes 16-bit PCM mono. Samples are clipped to the representable range.
pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let path = path.as_ref();
    if !signal.is_finite() {
        return Err(Error::Precondition("non-finite samples".into()));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &x in &signal.samples {
        let q = (x * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

/// Linear-interpolation resampler.
pub fn resample_linear(signal: &AudioSignal, sample_rate: u32) -> AudioSignal {
    if signal.sample_rate == sample_rate || signal.is_empty() {
        return AudioSignal::new(signal.samples.clone(), sample_rate);
    }
    let ratio = signal.sample_rate as f64 / sample_rate as f64;
    let out_len = ((signal.len() as f64) / ratio).floor().max(1.0) as usize;
    let last = signal.len() - 1;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = (pos.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = pos - i0 as f64;
            signal.samples[i0] * (1.0 - frac) + signal.samples[i1] * frac
        })
        .collect();
    AudioSignal::new(samples, sample_rate)
}
