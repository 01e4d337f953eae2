//! Iterative radix-2 FFT over `(re, im)` pairs.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// In-place forward DFT, `X[k] = sum_n x[n] * exp(-2*pi*i*k*n/N)`.
///
/// `re` and `im` must have the same power-of-two length.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) -> Result<()> {
    let n = re.len();
    if im.len() != n {
        return Err(Error::usage("fft: real and imaginary parts differ in length"));
    }
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::usage(format!("fft: length {n} is not a power of two")));
    }

    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = if bits == 0 {
            0
        } else {
            i.reverse_bits() >> (usize::BITS - bits)
        };
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // Twiddles are evaluated directly rather than by repeated
                // multiplication so error does not accumulate along a stage.
                let (s, c) = (step * k as f64).sin_cos();
                let a = start + k;
                let b = a + half;
                let tr = re[b] * c - im[b] * s;
                let ti = re[b] * s + im[b] * c;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Magnitudes of bins `0..=N/2` of the DFT of a real signal.
pub fn real_magnitudes(signal: &[f64]) -> Result<Vec<f64>> {
    let mut re = signal.to_vec();
    let mut im = vec![0.0; signal.len()];
    fft_in_place(&mut re, &mut im)?;
    let half = signal.len() / 2;
    Ok((0..=half).map(|k| re[k].hypot(im[k])).collect())
}
