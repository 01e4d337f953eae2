//! Feature front end: normalization, pre-emphasis, STFT amplitude spectra,
//! mel filterbank, MFCC and SpecAugment masking.

mod augment;
pub mod fft;
mod matrix;
mod mel;
mod mfcc;
pub mod wav;

pub use augment::{spec_augment, MaskSpec};
pub use matrix::FeatureMatrix;
pub use mel::{hz_to_mel, mel_to_hz, MelFilterbank};
pub use mfcc::{amplitude_spectrum, mfcc, AMPLITUDE_FLOOR};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Variance floor applied before dividing by the standard deviation.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Default number of mel filters.
pub const DEFAULT_FILTERS: usize = 26;
/// Default number of cepstral coefficients kept.
pub const DEFAULT_CEPSTRA: usize = 13;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub sample_rate_hz: u32,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(sample_rate_hz: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::data("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::data("waveform has no samples"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::data("waveform contains non-finite samples"));
        }
        Ok(Self {
            sample_rate_hz,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// STFT framing parameters, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub step_samples: usize,
    pub window_samples: usize,
    pub fft_size: usize,
}

impl Default for FrameSpec {
    /// 10 ms step, 25 ms window, 512-point FFT at 16 kHz.
    fn default() -> Self {
        Self {
            step_samples: 160,
            window_samples: 400,
            fft_size: 512,
        }
    }
}

impl FrameSpec {
    pub fn new(step_samples: usize, window_samples: usize, fft_size: usize) -> Result<Self> {
        let spec = Self {
            step_samples,
            window_samples,
            fft_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_samples == 0
            || self.step_samples > self.window_samples
            || self.window_samples > self.fft_size
        {
            return Err(Error::usage(format!(
                "frame spec requires 0 < step ({}) <= window ({}) <= fft size ({})",
                self.step_samples, self.window_samples, self.fft_size
            )));
        }
        if !self.fft_size.is_power_of_two() {
            return Err(Error::usage(format!(
                "fft size {} is not a power of two",
                self.fft_size
            )));
        }
        Ok(())
    }

    /// Number of spectrum bins kept, `fft_size / 2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of complete windows in a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.window_samples {
            0
        } else {
            (len - self.window_samples) / self.step_samples + 1
        }
    }
}

/// Per-utterance mean and variance normalization.
pub fn normalize_wave(w: &Waveform) -> Result<Waveform> {
    if w.len() < 2 {
        return Err(Error::data("normalization needs at least two samples"));
    }
    let n = w.len() as f64;
    let mean = w.samples.iter().sum::<f64>() / n;
    let var = w.samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let std = var.max(VARIANCE_FLOOR).sqrt();
    let samples = w.samples.iter().map(|s| (s - mean) / std).collect();
    Ok(Waveform {
        sample_rate_hz: w.sample_rate_hz,
        samples,
    })
}

/// First-order differencing, `out[t] = in[t + 1] - in[t]`.
pub fn pre_emphasize(w: &Waveform) -> Result<Waveform> {
    if w.len() < 2 {
        return Err(Error::data("pre-emphasis needs at least two samples"));
    }
    let samples = w.samples.windows(2).map(|p| p[1] - p[0]).collect();
    Ok(Waveform {
        sample_rate_hz: w.sample_rate_hz,
        samples,
    })
}

/// Hann window value at 1-based index `n` of a length-`len` window.
pub fn hann_window(n: usize, len: usize) -> Result<f64> {
    if len < 2 || n < 1 || n > len {
        return Err(Error::usage(format!(
            "hann window index {n} outside 1..={len} (length must be >= 2)"
        )));
    }
    Ok(hann_unchecked(n, len))
}

#[inline]
pub(crate) fn hann_unchecked(n: usize, len: usize) -> f64 {
    0.5 - 0.5 * (2.0 * PI * (n - 1) as f64 / (len - 1) as f64).cos()
}
