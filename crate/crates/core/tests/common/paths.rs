use std::collections::HashMap;

use sgk_core::ctc::{Posteriorgram, BLANK};
use sgk_core::decode::CountLm;

pub fn merge_and_drop_blanks(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &y in path {
        if Some(y) != prev && y != BLANK {
            out.push(y);
        }
        prev = Some(y);
    }
    out
}

/// Every alignment path of length `frames` over `k` symbols.
pub fn all_paths(frames: usize, k: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![vec![]];
    for _ in 0..frames {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |v| {
                    let mut e = p.clone();
                    e.push(v);
                    e
                })
            })
            .collect();
    }
    paths
}

pub fn path_logprob(p: &Posteriorgram, path: &[usize]) -> f64 {
    path.iter().enumerate().map(|(t, &v)| p.row(t)[v]).sum()
}

/// Probability of each label sequence, summing path probabilities directly.
pub fn sum_over_paths(p: &Posteriorgram) -> HashMap<Vec<usize>, f64> {
    let mut out = HashMap::new();
    for path in all_paths(p.num_frames(), p.num_labels()) {
        *out.entry(merge_and_drop_blanks(&path)).or_insert(0.0) += path_logprob(p, &path).exp();
    }
    out
}

/// Three frames over {blank, a, b}: "a", then blank, then a near tie.
pub fn flip_posteriorgram() -> Posteriorgram {
    Posteriorgram::from_probs(&[
        vec![0.02, 0.96, 0.02],
        vec![0.96, 0.02, 0.02],
        vec![0.01, 0.54, 0.45],
    ])
    .unwrap()
}

/// Bigram trained on 8 x "a b" and 1 x "a a" with alpha = 1.
pub fn flip_lm() -> CountLm {
    let mut corpus = vec![vec![1, 2]; 8];
    corpus.push(vec![1, 1]);
    CountLm::train(&corpus, 2, 2, 1.0).unwrap()
}
