//! Connectionist temporal classification: collapse function, forward and
//! backward dynamic programs, prefix probabilities and a brute-force oracle.
//!
//! Label ids index the extended vocabulary `V' = {blank} + V` with the blank
//! fixed at id 0. A label sequence is a slice of ids in `1..K`; an alignment
//! path is a slice of ids in `0..K`.

mod brute;
mod forward_backward;
mod posteriorgram;
mod prefix;
mod vocab;

pub use brute::{ctc_bruteforce, sequence_distribution, BRUTEFORCE_LIMIT};
pub use forward_backward::{ctc_backward, ctc_forward, ctc_loss, BackwardTable, ForwardTable};
pub use posteriorgram::Posteriorgram;
pub use prefix::ctc_prefix_logprob;
pub use vocab::Vocabulary;

/// Id of the blank label in the extended vocabulary.
pub const BLANK: usize = 0;

/// Merges adjacent repeats, then drops blanks.
pub fn collapse(path: &[usize]) -> Vec<usize> {
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

/// Minimum number of frames an alignment of `labels` needs: one per label
/// plus one blank between each pair of equal neighbours.
pub fn min_frames(labels: &[usize]) -> usize {
    labels.len() + labels.windows(2).filter(|p| p[0] == p[1]).count()
}
