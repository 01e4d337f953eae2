use super::forward_backward::check_labels;
use super::{Posteriorgram, BLANK};
use crate::error::Result;
use crate::logspace::{log_add, NEG_INF};

/// `ln sum_nu p_CTC(prefix . nu | p)`, the log-probability that the emitted
/// sequence starts with `prefix`.
///
/// The prefix is complete once its last label is first emitted: the frames
/// before hold an alignment of `prefix[..n-1]` (ending in blank, or in a
/// different label) and the frames after are unconstrained. Summing that
/// entry event over frames gives the prefix probability.
pub fn ctc_prefix_logprob(p: &Posteriorgram, prefix: &[usize]) -> Result<f64> {
    check_labels(p, prefix)?;
    let n_labels = prefix.len();
    if n_labels == 0 {
        return Ok(0.0);
    }
    let frames = p.num_frames();
    if frames == 0 {
        return Ok(NEG_INF);
    }

    // Forward variables over `prefix[..n_labels - 1]` for the frames seen so
    // far; `blank[n]` / `label[n]` hold Q_e(t, n) / Q_l(t, n).
    let head = n_labels - 1;
    let last = prefix[head];
    let mut blank = vec![NEG_INF; head + 1];
    let mut label = vec![NEG_INF; head + 1];
    let mut total = NEG_INF;

    for t in 0..frames {
        // Entry of the last prefix label at frame t.
        let before = if t == 0 {
            if head == 0 {
                0.0
            } else {
                NEG_INF
            }
        } else {
            let mut b = blank[head];
            if head == 0 || prefix[head - 1] != last {
                b = log_add(b, label[head]);
            }
            b
        };
        total = log_add(total, p.log_prob(t, last) + before);

        // Advance the forward variables of the head to frame t.
        let pb = p.log_prob(t, BLANK);
        if t == 0 {
            blank[0] = pb;
            if head >= 1 {
                label[1] = p.log_prob(0, prefix[0]);
            }
            continue;
        }
        for n in (1..=head).rev() {
            let new_blank = pb + log_add(blank[n], label[n]);
            let mut enter = log_add(label[n], blank[n - 1]);
            if n == 1 || prefix[n - 1] != prefix[n - 2] {
                enter = log_add(enter, label[n - 1]);
            }
            label[n] = p.log_prob(t, prefix[n - 1]) + enter;
            blank[n] = new_blank;
        }
        blank[0] += pb;
    }
    Ok(total)
}
