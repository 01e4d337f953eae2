//! Naive O(N^2) front-end oracles written straight from the definitions.

use std::f64::consts::PI;

pub fn hann(n: usize, len: usize) -> f64 {
    0.5 - 0.5 * (2.0 * PI * (n as f64 - 1.0) / (len as f64 - 1.0)).cos()
}

/// Magnitudes of bins `0..=n/2` of a plain DFT.
pub fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * j) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Zero-pad to `fft_size`, weight by an `fft_size`-point Hann window, DFT.
pub fn spectrum(frame: &[f64], fft_size: usize) -> Vec<f64> {
    let mut padded = vec![0.0; fft_size];
    for (i, v) in frame.iter().enumerate() {
        padded[i] = v * hann(i + 1, fft_size);
    }
    dft_magnitudes(&padded)
}

fn mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Triangular filters on `num_filters + 2` equidistant mel points spanning
/// `[0, mel(fs / 2)]`.
pub fn filterbank(num_filters: usize, fft_size: usize, fs: f64) -> Vec<Vec<f64>> {
    let top = mel(fs / 2.0);
    let edge = |i: usize| top * i as f64 / (num_filters + 1) as f64;
    (0..num_filters)
        .map(|i| {
            let (l, c, r) = (edge(i), edge(i + 1), edge(i + 2));
            (0..=fft_size / 2)
                .map(|k| {
                    let m = mel(k as f64 * fs / fft_size as f64);
                    if m <= l || m >= r {
                        0.0
                    } else if m <= c {
                        (m - l) / (c - l)
                    } else {
                        (r - m) / (r - c)
                    }
                })
                .collect()
        })
        .collect()
}

/// Filterbank energies per frame (before the log) at the default framing.
pub fn filterbank_energies(samples: &[f64], num_filters: usize) -> Vec<Vec<f64>> {
    let emph: Vec<f64> = samples.windows(2).map(|p| p[1] - p[0]).collect();
    let fb = filterbank(num_filters, 512, 16000.0);
    let mut out = Vec::new();
    let mut start = 0;
    while start + 400 <= emph.len() {
        let s = spectrum(&emph[start..start + 400], 512);
        out.push(fb.iter().map(|row| row.iter().zip(&s).map(|(w, x)| w * x).sum()).collect());
        start += 160;
    }
    out
}

/// End-to-end MFCC: log10 of floored energies followed by the DCT sum.
pub fn mfcc(samples: &[f64], num_filters: usize, num_cepstra: usize) -> Vec<Vec<f64>> {
    filterbank_energies(samples, num_filters)
        .into_iter()
        .map(|e| {
            let logs: Vec<f64> = e.iter().map(|v| v.max(1e-10).log10()).collect();
            (0..num_cepstra)
                .map(|m| {
                    logs.iter()
                        .enumerate()
                        .map(|(i, x)| x * (PI * m as f64 * (i as f64 + 0.5) / num_filters as f64).cos())
                        .sum()
                })
                .collect()
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
