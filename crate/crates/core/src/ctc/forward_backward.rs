use super::{Posteriorgram, BLANK};
use crate::error::{Error, Result};
use crate::logspace::{log_add, NEG_INF};

/// Forward variables in log space, indexed `[t][n]` with 0-based frame `t`
/// and `n` in `0..=N` (the number of labels consumed).
#[derive(Debug, Clone)]
pub struct ForwardTable {
    /// Alignments of `w_1^n` over frames `1..=t+1` ending in blank.
    pub q_blank: Vec<Vec<f64>>,
    /// Alignments of `w_1^n` over frames `1..=t+1` ending in a label.
    pub q_label: Vec<Vec<f64>>,
    /// `ln p_CTC(w | p)`; `-inf` when no alignment exists.
    pub log_prob: f64,
}

/// Backward variables in log space, indexed `[t][n]` with 0-based frame `t`
/// and 1-based label position `n` in `1..=N+1` (column 0 is unused).
#[derive(Debug, Clone)]
pub struct BackwardTable {
    pub r_blank: Vec<Vec<f64>>,
    pub r_label: Vec<Vec<f64>>,
    pub log_prob: f64,
}

pub(crate) fn check_labels(p: &Posteriorgram, labels: &[usize]) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&v| v == BLANK || v >= p.num_labels()) {
        return Err(Error::data(format!(
            "label id {bad} is not a true label of a {}-symbol posteriorgram",
            p.num_labels()
        )));
    }
    Ok(())
}

/// Forward pass. Infeasible targets yield `log_prob = -inf`.
pub fn ctc_forward(p: &Posteriorgram, labels: &[usize]) -> Result<ForwardTable> {
    check_labels(p, labels)?;
    let frames = p.num_frames();
    let n_labels = labels.len();
    let mut q_blank = vec![vec![NEG_INF; n_labels + 1]; frames];
    let mut q_label = vec![vec![NEG_INF; n_labels + 1]; frames];

    if frames == 0 {
        let log_prob = if n_labels == 0 { 0.0 } else { NEG_INF };
        return Ok(ForwardTable {
            q_blank,
            q_label,
            log_prob,
        });
    }

    // Q_e(t, 0) = prod p(blank); Q_l(t, 0) = 0
    let mut acc = 0.0;
    for t in 0..frames {
        acc += p.log_prob(t, BLANK);
        q_blank[t][0] = acc;
    }
    // Q_e(1, n) = 0 for n >= 1; Q_l(1, 1) = p_1(w_1)
    if n_labels >= 1 {
        q_label[0][1] = p.log_prob(0, labels[0]);
    }

    for t in 1..frames {
        let blank = p.log_prob(t, BLANK);
        for n in 1..=n_labels {
            q_blank[t][n] = blank + log_add(q_blank[t - 1][n], q_label[t - 1][n]);

            let mut enter = log_add(q_label[t - 1][n], q_blank[t - 1][n - 1]);
            if n == 1 || labels[n - 1] != labels[n - 2] {
                enter = log_add(enter, q_label[t - 1][n - 1]);
            }
            q_label[t][n] = p.log_prob(t, labels[n - 1]) + enter;
        }
    }

    let log_prob = log_add(q_blank[frames - 1][n_labels], q_label[frames - 1][n_labels]);
    Ok(ForwardTable {
        q_blank,
        q_label,
        log_prob,
    })
}

/// Backward pass; its total must agree with [`ctc_forward`].
pub fn ctc_backward(p: &Posteriorgram, labels: &[usize]) -> Result<BackwardTable> {
    check_labels(p, labels)?;
    let frames = p.num_frames();
    let n_labels = labels.len();
    let mut r_blank = vec![vec![NEG_INF; n_labels + 2]; frames];
    let mut r_label = vec![vec![NEG_INF; n_labels + 2]; frames];

    if frames == 0 {
        let log_prob = if n_labels == 0 { 0.0 } else { NEG_INF };
        return Ok(BackwardTable {
            r_blank,
            r_label,
            log_prob,
        });
    }
    let last = frames - 1;

    // R_e(t, N+1) = prod_{t' >= t} p(blank); R_l(t, N+1) = 0
    let mut acc = 0.0;
    for t in (0..frames).rev() {
        acc += p.log_prob(t, BLANK);
        r_blank[t][n_labels + 1] = acc;
    }
    // R_e(T', n) = 0 for n <= N; R_l(T', N) = p_T'(w_N)
    if n_labels >= 1 {
        r_label[last][n_labels] = p.log_prob(last, labels[n_labels - 1]);
    }

    for t in (0..last).rev() {
        let blank = p.log_prob(t, BLANK);
        for n in 1..=n_labels {
            r_blank[t][n] = blank + log_add(r_blank[t + 1][n], r_label[t + 1][n]);

            let mut leave = log_add(r_label[t + 1][n], r_blank[t + 1][n + 1]);
            if n == n_labels || labels[n - 1] != labels[n] {
                leave = log_add(leave, r_label[t + 1][n + 1]);
            }
            r_label[t][n] = p.log_prob(t, labels[n - 1]) + leave;
        }
    }

    // With N = 0 the start column is N + 1 = 1, so the total is uniform.
    let log_prob = log_add(r_blank[0][1], r_label[0][1]);
    Ok(BackwardTable {
        r_blank,
        r_label,
        log_prob,
    })
}

/// `-ln p_CTC(w | p)`; `+inf` exactly when the target is infeasible.
pub fn ctc_loss(p: &Posteriorgram, labels: &[usize]) -> Result<f64> {
    let lp = ctc_forward(p, labels)?.log_prob;
    // clamp rounding noise from rows that are normalized only to ~1e-16
    Ok((-lp).max(0.0))
}
