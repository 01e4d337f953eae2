//! CTC decoding (greedy, time-synchronous, label-synchronous), language
//! models with shallow fusion, label priors, and attention-decoder search.

mod aed;
mod labelsync;
pub mod lm;
mod timesync;

pub use aed::{aed_attention, aed_beam, AedAttention, SequenceModel};
pub use labelsync::labelsync_beam;
pub use lm::{lm_perplexity, CountLm, LanguageModel, UniformLm, EOS};
pub use timesync::timesync_beam;

use std::cmp::Ordering;

use crate::ctc::{collapse, Posteriorgram};
use crate::error::{Error, Result};

/// Beam search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub lm_scale: f64,
    pub prior_scale: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_size: 8,
            lm_scale: 0.0,
            prior_scale: 0.0,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size < 1 {
            return Err(Error::usage("beam size must be at least 1"));
        }
        if !(self.lm_scale >= 0.0 && self.lm_scale.is_finite()) {
            return Err(Error::usage("LM scale must be a finite value >= 0"));
        }
        if !(self.prior_scale >= 0.0 && self.prior_scale.is_finite()) {
            return Err(Error::usage("prior scale must be a finite value >= 0"));
        }
        Ok(())
    }
}

/// A decoder result: label ids plus the log-domain score the search used.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub labels: Vec<usize>,
    pub score: f64,
}

/// `am + lm_scale * lm`. A zero scale disables the LM term outright, so an
/// impossible LM event cannot turn into `0 * -inf`.
#[inline]
pub fn shallow_fusion_score(am_logprob: f64, lm_logprob: f64, lm_scale: f64) -> f64 {
    if lm_scale == 0.0 {
        am_logprob
    } else {
        am_logprob + lm_scale * lm_logprob
    }
}

/// Ranking used for pruning and final selection: higher score first, then
/// the lexicographically smaller label sequence.
pub(crate) fn rank(a_score: f64, a_labels: &[usize], b_score: f64, b_labels: &[usize]) -> Ordering {
    b_score
        .partial_cmp(&a_score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a_labels.cmp(b_labels))
}

/// Collapse of the per-frame argmax path (lowest id wins ties).
pub fn greedy_decode(p: &Posteriorgram) -> Vec<usize> {
    let path: Vec<usize> = p
        .rows()
        .map(|row| {
            let mut best = 0;
            for (v, &lp) in row.iter().enumerate() {
                if lp > row[best] {
                    best = v;
                }
            }
            best
        })
        .collect();
    collapse(&path)
}

/// Frame-weighted average posterior over a collection of utterances.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPrior {
    pub log_prior: Vec<f64>,
}

impl LabelPrior {
    pub fn uniform(num_labels: usize) -> Self {
        Self {
            log_prior: vec![-(num_labels as f64).ln(); num_labels],
        }
    }
}

/// `prior[v] = sum_utt sum_t p_t(v) / sum_utt T'`.
pub fn estimate_prior(posteriorgrams: &[Posteriorgram]) -> Result<LabelPrior> {
    let first = posteriorgrams
        .first()
        .ok_or_else(|| Error::usage("prior estimation needs at least one posteriorgram"))?;
    let k = first.num_labels();
    if posteriorgrams.iter().any(|p| p.num_labels() != k) {
        return Err(Error::data("posteriorgrams disagree on the label count"));
    }
    let mut sums = vec![0.0; k];
    let mut frames = 0usize;
    for p in posteriorgrams {
        for row in p.rows() {
            for (s, lp) in sums.iter_mut().zip(row) {
                *s += lp.exp();
            }
        }
        frames += p.num_frames();
    }
    if frames == 0 {
        return Err(Error::data("prior estimation needs at least one frame"));
    }
    // Divide by the accumulated mass rather than the frame count so the
    // result is normalized even when rows carry ~1e-6 slack.
    let mass: f64 = sums.iter().sum();
    Ok(LabelPrior {
        log_prior: sums.iter().map(|s| (s / mass).ln()).collect(),
    })
}
