//! RIFF/WAVE input and output (mono, 16-bit signed PCM only).

use std::io::{Read, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::Waveform;
use crate::error::{Error, Result};

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::data(format!("malformed WAV: {other}")),
    }
}

/// Decodes a mono PCM16 WAV stream into samples in `[-1, 1)`.
pub fn read_wav<R: Read>(input: R) -> Result<Waveform> {
    let reader = WavReader::new(input).map_err(wav_error)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::data(format!(
            "unsupported WAV: channels = {} (expected 1)",
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Int {
        return Err(Error::data("unsupported WAV: sample format is float (expected PCM)"));
    }
    if spec.bits_per_sample != 16 {
        return Err(Error::data(format!(
            "unsupported WAV: bits_per_sample = {} (expected 16)",
            spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(wav_error)?;
    Waveform::new(spec.sample_rate, samples)
}

pub fn read_wav_file(path: &Path) -> Result<Waveform> {
    let file = std::fs::File::open(path)?;
    read_wav(std::io::BufReader::new(file))
}

/// Encodes a waveform as mono PCM16, clamping to the representable range.
pub fn write_wav<W: Write + std::io::Seek>(w: &Waveform, out: W) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::new(out, spec).map_err(wav_error)?;
    for &s in &w.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(wav_error)?;
    }
    writer.finalize().map_err(wav_error)
}
