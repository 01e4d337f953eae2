//! Attention encoder-decoder pieces: additive attention over encoder frames
//! and beam search over the auxiliary quantity
//! `Q(n; w_1^n) = p(w_n | w_0^{n-1}, x) * Q(n-1; w_1^{n-1})`.

use super::{rank, DecodeConfig, Hypothesis, EOS};
use crate::error::{Error, Result};
use crate::logspace::{softmax, NEG_INF};

/// Additive attention parameters: energy `e_t = w2 . tanh(W1 [g; h_t])`.
#[derive(Debug, Clone, PartialEq)]
pub struct AedAttention {
    /// `d_key` rows of length `d_state + d_enc`.
    pub w1: Vec<Vec<f64>>,
    /// Length `d_key`.
    pub w2: Vec<f64>,
}

impl AedAttention {
    pub fn energy(&self, state: &[f64], frame: &[f64]) -> f64 {
        self.w1
            .iter()
            .zip(&self.w2)
            .map(|(row, w2)| {
                let pre: f64 = row
                    .iter()
                    .zip(state.iter().chain(frame))
                    .map(|(a, b)| a * b)
                    .sum();
                w2 * pre.tanh()
            })
            .sum()
    }
}

/// Attention weights over encoder frames and the resulting context vector.
pub fn aed_attention(
    state: &[f64],
    encodings: &[Vec<f64>],
    params: &AedAttention,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let enc_dim = encodings
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::usage("attention needs at least one encoder frame"))?;
    if encodings.iter().any(|h| h.len() != enc_dim) {
        return Err(Error::usage("encoder frames differ in dimension"));
    }
    if params.w1.len() != params.w2.len() {
        return Err(Error::usage("W1 rows and W2 length disagree"));
    }
    if params.w1.iter().any(|r| r.len() != state.len() + enc_dim) {
        return Err(Error::usage(format!(
            "W1 rows must have length {} (state {} + encoding {enc_dim})",
            state.len() + enc_dim,
            state.len()
        )));
    }
    let energies: Vec<f64> = encodings.iter().map(|h| params.energy(state, h)).collect();
    let weights = softmax(&energies);
    let mut context = vec![0.0; enc_dim];
    for (a, h) in weights.iter().zip(encodings) {
        for (c, v) in context.iter_mut().zip(h) {
            *c += a * v;
        }
    }
    Ok((weights, context))
}

/// Label-level conditional model `p(w_n | w_1^{n-1}, x)`.
pub trait SequenceModel {
    /// `|V|`.
    fn num_labels(&self) -> usize;
    /// Log-probabilities over `{EOS} + V` (index 0 is EOS, then label ids).
    fn next_logprobs(&self, history: &[usize]) -> Vec<f64>;
}

/// Beam search over `ln Q`. At each step every live hypothesis proposes EOS
/// and every label; the best `beam_size` proposals survive, the EOS ones are
/// finished and the rest stay live. Hypotheses of length `max_len` can only
/// propose EOS.
pub fn aed_beam(model: &dyn SequenceModel, cfg: &DecodeConfig, max_len: usize) -> Result<Hypothesis> {
    cfg.validate()?;
    if max_len < 1 {
        return Err(Error::usage("maximum output length must be at least 1"));
    }
    let num_labels = model.num_labels();
    let mut live: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 0.0)];
    let mut best = Hypothesis {
        labels: Vec::new(),
        score: NEG_INF,
    };

    while !live.is_empty() {
        // (labels, score, finished)
        let mut proposals: Vec<(Vec<usize>, f64, bool)> = Vec::new();
        for (labels, q) in &live {
            let lps = model.next_logprobs(labels);
            if lps.len() != num_labels + 1 {
                return Err(Error::usage("sequence model returned the wrong number of outcomes"));
            }
            if q + lps[EOS] > NEG_INF {
                proposals.push((labels.clone(), q + lps[EOS], true));
            }
            if labels.len() < max_len {
                for v in 1..=num_labels {
                    let s = q + lps[v];
                    if s > NEG_INF {
                        let mut ext = labels.clone();
                        ext.push(v);
                        proposals.push((ext, s, false));
                    }
                }
            }
        }
        proposals.sort_by(|a, b| {
            rank(a.1, &a.0, b.1, &b.0).then_with(|| b.2.cmp(&a.2))
        });
        proposals.truncate(cfg.beam_size);

        live.clear();
        for (labels, score, finished) in proposals {
            if finished {
                if rank(score, &labels, best.score, &best.labels).is_lt() {
                    best = Hypothesis { labels, score };
                }
            } else {
                live.push((labels, score));
            }
        }
        // Q only shrinks along extensions.
        if live.iter().all(|(_, s)| *s <= best.score) {
            break;
        }
    }
    Ok(best)
}
