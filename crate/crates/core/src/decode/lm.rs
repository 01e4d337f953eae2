//! Language models over the true-label ids of a [`Vocabulary`].
//!
//! LM tokens reuse the label ids `1..=|V|`; id [`EOS`] (the blank slot, 0)
//! stands for end-of-sequence, which the blank never needs in an LM.

use std::collections::HashMap;

use crate::ctc::Vocabulary;
use crate::error::{Error, Result};

/// End-of-sequence token id.
pub const EOS: usize = 0;
/// Token text for sentence start in count files.
pub const BOS_TOKEN: &str = "<s>";
/// Token text for sentence end in count files.
pub const EOS_TOKEN: &str = "</s>";

/// Autoregressive LM: `p(w_1^N) = prod_n p(w_n | w_1^{n-1}) * p(EOS | w_1^N)`.
pub trait LanguageModel: Send + Sync {
    /// `|V|`; predictions range over `1..=|V|` plus [`EOS`].
    fn num_labels(&self) -> usize;

    /// `ln p(next | history)`.
    fn cond_logprob(&self, next: usize, history: &[usize]) -> f64;

    /// Sum of conditionals over `seq`, optionally closed with EOS.
    fn sequence_logprob(&self, seq: &[usize], with_eos: bool) -> f64 {
        let mut total: f64 = seq
            .iter()
            .enumerate()
            .map(|(n, &w)| self.cond_logprob(w, &seq[..n]))
            .sum();
        if with_eos {
            total += self.cond_logprob(EOS, seq);
        }
        total
    }
}

/// Uniform distribution over `V + {EOS}`.
#[derive(Debug, Clone, Copy)]
pub struct UniformLm {
    num_labels: usize,
}

impl UniformLm {
    pub fn new(num_labels: usize) -> Self {
        Self { num_labels }
    }
}

impl LanguageModel for UniformLm {
    fn num_labels(&self) -> usize {
        self.num_labels
    }

    fn cond_logprob(&self, next: usize, _history: &[usize]) -> f64 {
        if next > self.num_labels {
            return f64::NEG_INFINITY;
        }
        -((self.num_labels + 1) as f64).ln()
    }
}

/// History key for the sentence start.
const BOS: usize = usize::MAX;

/// Add-alpha smoothed unigram or bigram model.
///
/// Bigram conditionals for a history with no observed continuations back off
/// to the smoothed unigram distribution, so every conditional is normalized
/// over `V + {EOS}`.
#[derive(Debug, Clone)]
pub struct CountLm {
    order: usize,
    alpha: f64,
    num_labels: usize,
    /// Indexed by token id, `EOS` at 0.
    unigrams: Vec<f64>,
    unigram_total: f64,
    bigrams: HashMap<(usize, usize), f64>,
    history_totals: HashMap<usize, f64>,
}

impl CountLm {
    fn empty(order: usize, alpha: f64, num_labels: usize) -> Result<Self> {
        if order != 1 && order != 2 {
            return Err(Error::usage(format!("count LM order must be 1 or 2, got {order}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::usage(format!("smoothing constant must be > 0, got {alpha}")));
        }
        Ok(Self {
            order,
            alpha,
            num_labels,
            unigrams: vec![0.0; num_labels + 1],
            unigram_total: 0.0,
            bigrams: HashMap::new(),
            history_totals: HashMap::new(),
        })
    }

    /// Counts n-grams of a corpus of label-id sentences (each closed by EOS).
    pub fn train(corpus: &[Vec<usize>], num_labels: usize, order: usize, alpha: f64) -> Result<Self> {
        let mut lm = Self::empty(order, alpha, num_labels)?;
        for sentence in corpus {
            if let Some(&bad) = sentence.iter().find(|&&w| w == EOS || w > num_labels) {
                return Err(Error::data(format!("label id {bad} out of range")));
            }
            let mut prev = BOS;
            for &w in sentence.iter().chain(std::iter::once(&EOS)) {
                lm.add_unigram(w, 1.0);
                if order == 2 {
                    lm.add_bigram(prev, w, 1.0);
                }
                prev = w;
            }
        }
        Ok(lm)
    }

    fn add_unigram(&mut self, w: usize, count: f64) {
        self.unigrams[w] += count;
        self.unigram_total += count;
    }

    fn add_bigram(&mut self, h: usize, w: usize, count: f64) {
        *self.bigrams.entry((h, w)).or_insert(0.0) += count;
        *self.history_totals.entry(h).or_insert(0.0) += count;
    }

    /// Parses `n-gram<TAB>count` lines; the order is the longest n-gram.
    ///
    /// `<s>` may only open a bigram; `</s>` may only close an n-gram.
    pub fn parse_counts(text: &str, vocab: &Vocabulary, alpha: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let (gram, count) = raw
                .split_once('\t')
                .ok_or_else(|| Error::data(format!("LM line {}: expected n-gram<TAB>count", i + 1)))?;
            let count: f64 = count
                .trim()
                .parse()
                .map_err(|_| Error::data(format!("LM line {}: bad count {count:?}", i + 1)))?;
            if !(count >= 0.0 && count.is_finite()) {
                return Err(Error::data(format!("LM line {}: count must be >= 0", i + 1)));
            }
            let tokens: Vec<&str> = gram.split_whitespace().collect();
            if tokens.is_empty() || tokens.len() > 2 {
                return Err(Error::data(format!(
                    "LM line {}: only unigrams and bigrams are supported",
                    i + 1
                )));
            }
            let ids = tokens
                .iter()
                .enumerate()
                .map(|(pos, t)| lm_token_id(t, pos, tokens.len(), vocab))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::data(format!("LM line {}: {e}", i + 1)))?;
            entries.push((ids, count));
        }
        let order = entries.iter().map(|(g, _)| g.len()).max().unwrap_or(1);
        let mut lm = Self::empty(order, alpha, vocab.num_labels())?;
        for (ids, count) in entries {
            match ids[..] {
                [w] if w != BOS => lm.add_unigram(w, count),
                [h, w] => lm.add_bigram(h, w, count),
                _ => return Err(Error::data("<s> cannot appear as a unigram")),
            }
        }
        Ok(lm)
    }

    /// Inverse of [`CountLm::parse_counts`]; zero counts are omitted.
    pub fn to_count_file(&self, vocab: &Vocabulary) -> String {
        let name = |id: usize| match id {
            EOS => EOS_TOKEN.to_string(),
            BOS => BOS_TOKEN.to_string(),
            i => vocab.token(i).unwrap_or("<unk>").to_string(),
        };
        let mut out = String::new();
        for (id, &c) in self.unigrams.iter().enumerate().skip(1).chain([(EOS, &self.unigrams[EOS])]) {
            if c > 0.0 {
                out.push_str(&format!("{}\t{}\n", name(id), c));
            }
        }
        let mut bigrams: Vec<_> = self.bigrams.iter().collect();
        // BOS first, then by id; EOS sorts after labels as a continuation
        bigrams.sort_by_key(|((h, w), _)| {
            let hk = if *h == BOS { 0 } else { *h + 1 };
            let wk = if *w == EOS { usize::MAX } else { *w };
            (hk, wk)
        });
        for ((h, w), c) in bigrams {
            out.push_str(&format!("{} {}\t{}\n", name(*h), name(*w), c));
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn unigram_logprob(&self, next: usize) -> f64 {
        let outcomes = (self.num_labels + 1) as f64;
        ((self.unigrams[next] + self.alpha) / (self.unigram_total + self.alpha * outcomes)).ln()
    }
}

fn lm_token_id(token: &str, pos: usize, len: usize, vocab: &Vocabulary) -> Result<usize> {
    match token {
        BOS_TOKEN if pos == 0 && len == 2 => Ok(BOS),
        EOS_TOKEN if pos == len - 1 => Ok(EOS),
        BOS_TOKEN | EOS_TOKEN => Err(Error::data(format!("{token} in an invalid position"))),
        t => vocab
            .id(t)
            .ok_or_else(|| Error::data(format!("token {t:?} is not in the vocabulary"))),
    }
}

impl LanguageModel for CountLm {
    fn num_labels(&self) -> usize {
        self.num_labels
    }

    fn cond_logprob(&self, next: usize, history: &[usize]) -> f64 {
        if next > self.num_labels {
            return f64::NEG_INFINITY;
        }
        if self.order == 2 {
            let h = history.last().copied().unwrap_or(BOS);
            if let Some(&total) = self.history_totals.get(&h).filter(|&&t| t > 0.0) {
                let c = self.bigrams.get(&(h, next)).copied().unwrap_or(0.0);
                let outcomes = (self.num_labels + 1) as f64;
                return ((c + self.alpha) / (total + self.alpha * outcomes)).ln();
            }
        }
        self.unigram_logprob(next)
    }
}

/// `exp` of the mean negative log-probability per token, EOS included.
pub fn lm_perplexity(lm: &dyn LanguageModel, corpus: &[Vec<usize>]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::usage("perplexity needs a non-empty corpus"));
    }
    // Neumaier-compensated sum over tokens, so the result does not depend on
    // how tokens are grouped into sentences.
    let (mut nll, mut carry) = (0.0f64, 0.0f64);
    let mut tokens = 0usize;
    for sentence in corpus {
        let eos = std::iter::once((EOS, sentence.len()));
        for (next, n) in sentence.iter().copied().zip(0..).chain(eos) {
            let x = -lm.cond_logprob(next, &sentence[..n]);
            if x == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            let t = nll + x;
            carry += if nll.abs() >= x.abs() { (nll - t) + x } else { (x - t) + nll };
            nll = t;
        }
        tokens += sentence.len() + 1;
    }
    Ok(((nll + carry) / tokens as f64).exp())
}
