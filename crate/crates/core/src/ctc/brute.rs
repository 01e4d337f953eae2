//! Exhaustive path enumeration. Exponential in the number of frames; used as
//! the reference oracle for the dynamic programs and decoders.

use std::collections::BTreeMap;

use super::forward_backward::check_labels;
use super::{collapse, Posteriorgram};
use crate::error::{Error, Result};

/// Largest `|V'|^T'` the enumeration accepts.
pub const BRUTEFORCE_LIMIT: u64 = 10_000_000;

fn path_count(p: &Posteriorgram) -> Result<u64> {
    let k = p.num_labels() as u64;
    let mut total: u64 = 1;
    for _ in 0..p.num_frames() {
        total = total.saturating_mul(k);
        if total > BRUTEFORCE_LIMIT {
            return Err(Error::usage(format!(
                "brute force over {}^{} paths exceeds the {BRUTEFORCE_LIMIT} limit",
                p.num_labels(),
                p.num_frames()
            )));
        }
    }
    Ok(total)
}

/// Visits every path with its linear probability.
fn for_each_path(p: &Posteriorgram, mut visit: impl FnMut(&[usize], f64)) -> Result<()> {
    let count = path_count(p)?;
    let k = p.num_labels();
    let frames = p.num_frames();
    let mut path = vec![0usize; frames];
    for _ in 0..count {
        let prob: f64 = path
            .iter()
            .enumerate()
            .map(|(t, &v)| p.log_prob(t, v).exp())
            .product();
        visit(&path, prob);
        // odometer increment
        for slot in path.iter_mut().rev() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
    }
    Ok(())
}

/// `p_CTC(w | p)` in linear space, summed over every path that collapses to
/// `labels`.
pub fn ctc_bruteforce(p: &Posteriorgram, labels: &[usize]) -> Result<f64> {
    check_labels(p, labels)?;
    let mut total = 0.0;
    for_each_path(p, |path, prob| {
        if collapse(path) == labels {
            total += prob;
        }
    })?;
    Ok(total)
}

/// Full distribution over label sequences (linear probabilities), keyed by
/// sequence. Sequences with zero probability mass may be absent.
pub fn sequence_distribution(p: &Posteriorgram) -> Result<BTreeMap<Vec<usize>, f64>> {
    let mut dist = BTreeMap::new();
    for_each_path(p, |path, prob| {
        *dist.entry(collapse(path)).or_insert(0.0) += prob;
    })?;
    Ok(dist)
}
