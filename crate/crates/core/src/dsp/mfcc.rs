use std::f64::consts::PI;

use super::{fft, hann_unchecked, pre_emphasize, FeatureMatrix, FrameSpec, MelFilterbank, Waveform};
use crate::error::{Error, Result};

/// Floor applied to filterbank outputs before `log10`.
pub const AMPLITUDE_FLOOR: f64 = 1e-10;

/// Magnitude spectrum of one analysis window.
///
/// The window is zero-padded to `fft_size` and the padded vector is weighted
/// by an `fft_size`-point Hann window before the FFT. Returns bins
/// `0..=fft_size/2`.
pub fn amplitude_spectrum(frame: &[f64], spec: &FrameSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if frame.len() != spec.window_samples {
        return Err(Error::data(format!(
            "frame has {} samples, expected {}",
            frame.len(),
            spec.window_samples
        )));
    }
    let mut padded = vec![0.0; spec.fft_size];
    for (n, (dst, &x)) in padded.iter_mut().zip(frame).enumerate() {
        *dst = x * hann_unchecked(n + 1, spec.fft_size);
    }
    fft::real_magnitudes(&padded)
}

/// DCT-II basis entry `cos(pi * m * (i + 0.5) / num_filters)`.
fn dct_basis(num_cepstra: usize, num_filters: usize) -> Vec<Vec<f64>> {
    (0..num_cepstra)
        .map(|m| {
            (0..num_filters)
                .map(|i| (PI * m as f64 * (i as f64 + 0.5) / num_filters as f64).cos())
                .collect()
        })
        .collect()
}

/// MFCC features of a 16 kHz waveform.
///
/// Pipeline per frame: pre-emphasis (whole signal), Hann-weighted zero-padded
/// FFT magnitudes, mel filterbank, `log10(max(x, AMPLITUDE_FLOOR))`, DCT.
pub fn mfcc(
    w: &Waveform,
    spec: &FrameSpec,
    fb: &MelFilterbank,
    num_cepstra: usize,
) -> Result<FeatureMatrix> {
    spec.validate()?;
    if w.sample_rate_hz != 16000 {
        return Err(Error::data(format!(
            "mfcc expects a 16000 Hz waveform, got {} Hz",
            w.sample_rate_hz
        )));
    }
    if num_cepstra == 0 || num_cepstra > fb.num_filters {
        return Err(Error::usage(format!(
            "number of cepstra ({num_cepstra}) must be in 1..={} (the filter count)",
            fb.num_filters
        )));
    }
    if fb.fft_size != spec.fft_size || fb.sample_rate_hz != w.sample_rate_hz {
        return Err(Error::usage(
            "filterbank was built for a different fft size or sample rate",
        ));
    }

    if w.len() < 2 {
        return Ok(FeatureMatrix::zeros(0, num_cepstra));
    }
    let emphasized = pre_emphasize(w)?;
    let num_frames = spec.num_frames(emphasized.len());
    let basis = dct_basis(num_cepstra, fb.num_filters);

    let mut data = Vec::with_capacity(num_frames * num_cepstra);
    for t in 0..num_frames {
        let start = t * spec.step_samples;
        let frame = &emphasized.samples[start..start + spec.window_samples];
        let spectrum = amplitude_spectrum(frame, spec)?;
        let log_energies: Vec<f64> = fb
            .apply(&spectrum)
            .into_iter()
            .map(|e| e.max(AMPLITUDE_FLOOR).log10())
            .collect();
        for row in &basis {
            data.push(row.iter().zip(&log_energies).map(|(c, x)| c * x).sum());
        }
    }
    FeatureMatrix::new(num_frames, num_cepstra, data)
}
