use crate::error::{Error, Result};

/// `2595 * log10(1 + f / 700)`.
pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if !(hz >= 0.0) {
        return Err(Error::usage(format!("frequency {hz} Hz is negative")));
    }
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with centers equidistant on the mel axis.
///
/// Filter `i` rises linearly (in mel) from point `i` to point `i + 1` and
/// falls to zero at point `i + 2`, where the `num_filters + 2` points split
/// `[0, mel(sample_rate / 2)]` evenly.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub num_filters: usize,
    pub sample_rate_hz: u32,
    pub fft_size: usize,
    /// Filter centers in mel.
    pub centers_mel: Vec<f64>,
    /// `num_filters` rows of `fft_size / 2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(num_filters: usize, fft_size: usize, sample_rate_hz: u32) -> Result<Self> {
        if num_filters == 0 {
            return Err(Error::usage("filterbank needs at least one filter"));
        }
        if sample_rate_hz == 0 {
            return Err(Error::usage("sample rate must be positive"));
        }
        if fft_size < 2 || !fft_size.is_power_of_two() {
            return Err(Error::usage(format!("fft size {fft_size} is not a power of two")));
        }
        let fs = sample_rate_hz as f64;
        let top = hz_to_mel(fs / 2.0)?;
        let spacing = top / (num_filters + 1) as f64;
        let points: Vec<f64> = (0..num_filters + 2).map(|i| i as f64 * spacing).collect();
        let bin_mels: Vec<f64> = (0..=fft_size / 2)
            .map(|k| hz_to_mel(k as f64 * fs / fft_size as f64))
            .collect::<Result<_>>()?;

        let mut weights = Vec::with_capacity(num_filters);
        for i in 0..num_filters {
            let (left, center, right) = (points[i], points[i + 1], points[i + 2]);
            let row: Vec<f64> = bin_mels
                .iter()
                .map(|&m| {
                    let rise = (m - left) / (center - left);
                    let fall = (right - m) / (right - center);
                    rise.min(fall).max(0.0)
                })
                .collect();
            if !row.iter().any(|&w| w > 0.0) {
                return Err(Error::usage(format!(
                    "mel filter {i} covers no FFT bin; use fewer filters or a larger fft size"
                )));
            }
            weights.push(row);
        }

        Ok(Self {
            num_filters,
            sample_rate_hz,
            fft_size,
            centers_mel: points[1..=num_filters].to_vec(),
            weights,
        })
    }

    /// Filter outputs `sum_k |S_k| * v_i[k]` for each filter `i`.
    pub fn apply(&self, spectrum: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(spectrum).map(|(w, s)| w * s).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_examples() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        assert!((hz_to_mel(700.0).unwrap() - 2595.0 * 2f64.log10()).abs() < 1e-6);
        assert!((hz_to_mel(700.0).unwrap() - 781.17).abs() < 0.01);
        assert!((hz_to_mel(1000.0).unwrap() - 999.99).abs() < 0.01);
        assert!(hz_to_mel(-1.0).is_err());
        assert!(hz_to_mel(f64::NAN).is_err());
    }

    #[test]
    fn mel_strictly_increasing_on_hz_grid() {
        let mut prev = hz_to_mel(0.0).unwrap();
        for f in 1..=8000 {
            let m = hz_to_mel(f as f64).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn mel_inverse() {
        for f in [0.0, 123.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(f).unwrap()) - f).abs() < 1e-9);
        }
    }

    #[test]
    fn filterbank_shape_and_spacing() {
        let fb = MelFilterbank::new(26, 512, 16000).unwrap();
        assert_eq!(fb.weights.len(), 26);
        assert!(fb.weights.iter().all(|r| r.len() == 257));
        let gap = fb.centers_mel[1] - fb.centers_mel[0];
        for pair in fb.centers_mel.windows(2) {
            assert!((pair[1] - pair[0] - gap).abs() < 1e-9);
        }
        let top = hz_to_mel(8000.0).unwrap();
        assert!((fb.centers_mel[25] + gap - top).abs() < 1e-9);
        for row in &fb.weights {
            assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
            assert!(row.iter().any(|&w| w > 0.0));
        }
    }

    #[test]
    fn filterbank_rows_piecewise_linear_in_mel() {
        // Every weight equals the triangle formula evaluated at its bin.
        let fb = MelFilterbank::new(10, 256, 16000).unwrap();
        let gap = fb.centers_mel[0];
        for (i, row) in fb.weights.iter().enumerate() {
            let c = fb.centers_mel[i];
            for (k, &w) in row.iter().enumerate() {
                let m = hz_to_mel(k as f64 * 16000.0 / 256.0).unwrap();
                let expect = (1.0 - (m - c).abs() / gap).max(0.0);
                assert!((w - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_many_filters_rejected() {
        assert!(MelFilterbank::new(200, 64, 16000).is_err());
        assert!(MelFilterbank::new(0, 512, 16000).is_err());
    }
}
