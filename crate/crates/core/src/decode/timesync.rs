use std::collections::HashMap;

use super::{rank, shallow_fusion_score, DecodeConfig, Hypothesis, LabelPrior, LanguageModel};
use crate::ctc::{Posteriorgram, BLANK};
use crate::error::{Error, Result};

/// A partial alignment. `last` is `None` for the virtual begin-of-sequence.
#[derive(Debug, Clone)]
struct Partial {
    alignment: Vec<usize>,
    labels: Vec<usize>,
    last: Option<usize>,
    score: f64,
}

/// Time-synchronous CTC beam search over alignments with max recombination.
///
/// Every frame expands each hypothesis by every symbol, adding
/// `ln p_t(v) - prior_scale * ln prior(v)`, plus `lm_scale * ln p_LM(v | B(g))`
/// whenever `v` emits a new label (non-blank and different from the last
/// symbol of the alignment). Expansions with the same collapsed sequence keep
/// only the best-scoring alignment, then the best `beam_size` survive. At the
/// end, the best hypothesis's LM end-of-sequence term is not added; the
/// returned score is the search score.
pub fn timesync_beam(
    p: &Posteriorgram,
    lm: &dyn LanguageModel,
    prior: Option<&LabelPrior>,
    cfg: &DecodeConfig,
) -> Result<Hypothesis> {
    cfg.validate()?;
    let k = p.num_labels();
    if let Some(prior) = prior {
        if prior.log_prior.len() != k {
            return Err(Error::data(format!(
                "prior has {} entries, posteriorgram has {k} symbols",
                prior.log_prior.len()
            )));
        }
    }
    if cfg.lm_scale > 0.0 && lm.num_labels() + 1 != k {
        return Err(Error::data(format!(
            "LM covers {} labels, posteriorgram has {} true labels",
            lm.num_labels(),
            k - 1
        )));
    }
    // Per-symbol acoustic offset from prior correction.
    let prior_offset: Vec<f64> = (0..k)
        .map(|v| match prior {
            Some(pr) if cfg.prior_scale != 0.0 => -cfg.prior_scale * pr.log_prior[v],
            _ => 0.0,
        })
        .collect();

    let mut hyps = vec![Partial {
        alignment: Vec::new(),
        labels: Vec::new(),
        last: None,
        score: 0.0,
    }];

    for t in 0..p.num_frames() {
        let mut best: HashMap<Vec<usize>, Partial> = HashMap::new();
        for g in &hyps {
            for v in 0..k {
                let am = g.score + p.log_prob(t, v) + prior_offset[v];
                let emits = v != BLANK && Some(v) != g.last;
                let (score, labels) = if emits {
                    let lm_lp = if cfg.lm_scale != 0.0 {
                        lm.cond_logprob(v, &g.labels)
                    } else {
                        0.0
                    };
                    let mut labels = g.labels.clone();
                    labels.push(v);
                    (shallow_fusion_score(am, lm_lp, cfg.lm_scale), labels)
                } else {
                    (am, g.labels.clone())
                };

                let replace = match best.get(&labels) {
                    None => true,
                    Some(cur) => {
                        score > cur.score
                            || (score == cur.score && alignment_lt(&g.alignment, v, &cur.alignment))
                    }
                };
                if replace {
                    let mut alignment = g.alignment.clone();
                    alignment.push(v);
                    best.insert(
                        labels.clone(),
                        Partial {
                            alignment,
                            labels,
                            last: Some(v),
                            score,
                        },
                    );
                }
            }
        }
        let mut next: Vec<Partial> = best.into_values().collect();
        next.sort_by(|a, b| rank(a.score, &a.labels, b.score, &b.labels));
        next.truncate(cfg.beam_size);
        hyps = next;
    }

    let winner = hyps
        .into_iter()
        .min_by(|a, b| rank(a.score, &a.labels, b.score, &b.labels))
        .expect("beam never empties");
    Ok(Hypothesis {
        labels: winner.labels,
        score: winner.score,
    })
}

/// Whether `prefix . v` sorts before `other` (same length).
fn alignment_lt(prefix: &[usize], v: usize, other: &[usize]) -> bool {
    prefix
        .iter()
        .chain(std::iter::once(&v))
        .cmp(other.iter())
        .is_lt()
}
