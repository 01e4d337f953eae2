#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgk_core::ctc::Posteriorgram;

pub mod attention;
pub mod dsp;
pub mod paths;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random posteriorgram with `frames` rows over `k` symbols (blank included).
pub fn random_posteriorgram(rng: &mut impl Rng, frames: usize, k: usize) -> Posteriorgram {
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|_| (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    Posteriorgram::from_logits(&rows).unwrap()
}

pub fn random_labels(rng: &mut impl Rng, max_len: usize, num_labels: usize) -> Vec<usize> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(1..=num_labels)).collect()
}

/// Every label sequence over `1..=num_labels` of length at most `max_len`.
pub fn all_sequences(num_labels: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for v in 1..=num_labels {
                let mut e: Vec<usize> = s.clone();
                e.push(v);
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Relative comparison in log space; equal infinities compare equal.
pub fn log_close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Numeric derivative of `f` at 0. Central differences at 1e-5 come first;
/// if that disagrees with `analytic`, a five-point stencil at 1e-3 (whose
/// round-off is ~100x smaller) gets a second opinion. Returns the closer one.
pub fn numeric_derivative(mut f: impl FnMut(f64) -> f64, analytic: f64) -> f64 {
    let h = 1e-5;
    let central = (f(h) - f(-h)) / (2.0 * h);
    let err = (central - analytic).abs();
    if err <= 1e-4 * central.abs().max(analytic.abs()) {
        return central;
    }
    let h = 1e-3;
    let stencil = (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
    if (stencil - analytic).abs() < err {
        stencil
    } else {
        central
    }
}
