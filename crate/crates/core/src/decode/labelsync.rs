use super::{rank, shallow_fusion_score, DecodeConfig, Hypothesis, LanguageModel, EOS};
use crate::ctc::{ctc_forward, ctc_prefix_logprob, Posteriorgram};
use crate::error::{Error, Result};
use crate::logspace::NEG_INF;

struct Partial {
    labels: Vec<usize>,
    /// `ln p_LM(w_1^n)` without the end-of-sequence term.
    lm_logprob: f64,
    score: f64,
}

/// Label-synchronous CTC beam search.
///
/// Each step extends every hypothesis by one label, scoring it with the CTC
/// prefix probability plus `lm_scale * ln p_LM(w_1^n)`, and keeps the best
/// `beam_size`. Every hypothesis may also terminate, scored by the full CTC
/// probability plus the scaled LM probability including end-of-sequence.
/// Labels are capped at `T'`. Prior correction does not apply here.
///
/// A partial score bounds the final score of every descendant (prefix mass
/// shrinks along extensions and LM terms are non-positive), so the search
/// stops once the best terminated hypothesis beats every live one.
pub fn labelsync_beam(
    p: &Posteriorgram,
    lm: &dyn LanguageModel,
    cfg: &DecodeConfig,
) -> Result<Hypothesis> {
    cfg.validate()?;
    let num_labels = p.num_labels() - 1;
    if cfg.lm_scale > 0.0 && lm.num_labels() != num_labels {
        return Err(Error::data(format!(
            "LM covers {} labels, posteriorgram has {num_labels} true labels",
            lm.num_labels()
        )));
    }
    let fuse = |am: f64, lm_lp: f64| shallow_fusion_score(am, lm_lp, cfg.lm_scale);
    let lm_term = |next: usize, history: &[usize]| {
        if cfg.lm_scale == 0.0 {
            0.0
        } else {
            lm.cond_logprob(next, history)
        }
    };

    let mut beam = vec![Partial {
        labels: Vec::new(),
        lm_logprob: 0.0,
        score: 0.0,
    }];
    let mut best = Hypothesis {
        labels: Vec::new(),
        score: NEG_INF,
    };

    for depth in 0..=p.num_frames() {
        for h in &beam {
            let am = ctc_forward(p, &h.labels)?.log_prob;
            let score = fuse(am, h.lm_logprob + lm_term(EOS, &h.labels));
            if score > NEG_INF && rank(score, &h.labels, best.score, &best.labels).is_lt() {
                best = Hypothesis {
                    labels: h.labels.clone(),
                    score,
                };
            }
        }
        if depth == p.num_frames() {
            break;
        }

        let mut next = Vec::new();
        for h in &beam {
            for v in 1..=num_labels {
                let mut labels = h.labels.clone();
                labels.push(v);
                let prefix = ctc_prefix_logprob(p, &labels)?;
                if prefix == NEG_INF {
                    continue;
                }
                let lm_logprob = h.lm_logprob + lm_term(v, &h.labels);
                let score = fuse(prefix, lm_logprob);
                if score > NEG_INF {
                    next.push(Partial {
                        labels,
                        lm_logprob,
                        score,
                    });
                }
            }
        }
        next.sort_by(|a, b| rank(a.score, &a.labels, b.score, &b.labels));
        next.truncate(cfg.beam_size);
        beam = next;
        match beam.first() {
            None => break,
            Some(top) if best.score >= top.score => break,
            _ => {}
        }
    }
    Ok(best)
}
