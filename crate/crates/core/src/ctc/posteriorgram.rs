use std::io::BufRead;

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Tolerance on `logsumexp(row) = 0`.
pub const ROW_TOLERANCE: f64 = 1e-6;

/// Per-frame log-probability rows over the extended vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriorgram {
    num_frames: usize,
    num_labels: usize,
    log_probs: Vec<f64>,
}

impl Posteriorgram {
    /// Validates that every row is a log-distribution.
    pub fn new(num_frames: usize, num_labels: usize, log_probs: Vec<f64>) -> Result<Self> {
        if num_labels < 2 {
            return Err(Error::data("posteriorgram needs the blank plus at least one label"));
        }
        if log_probs.len() != num_frames * num_labels {
            return Err(Error::data(format!(
                "posteriorgram has {} values, expected {num_frames} x {num_labels}",
                log_probs.len()
            )));
        }
        for (t, row) in log_probs.chunks(num_labels).enumerate() {
            if row.iter().any(|v| v.is_nan() || *v > 1e-9) {
                return Err(Error::data(format!(
                    "frame {}: log-probabilities must be <= 0",
                    t + 1
                )));
            }
            let total = log_sum_exp(row);
            if !((total).abs() <= ROW_TOLERANCE) {
                return Err(Error::data(format!(
                    "frame {}: row is not normalized (logsumexp = {total})",
                    t + 1
                )));
            }
        }
        Ok(Self {
            num_frames,
            num_labels,
            log_probs,
        })
    }

    /// Builds from linear-probability rows.
    pub fn from_probs(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::data("ragged posteriorgram rows"));
        }
        let logs = rows.iter().flatten().map(|p| p.ln()).collect();
        Self::new(rows.len(), k, logs)
    }

    /// Builds from unnormalized logits by a per-row log-softmax.
    pub fn from_logits(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        let mut logs = Vec::with_capacity(rows.len() * k);
        for r in rows {
            if r.len() != k {
                return Err(Error::data("ragged posteriorgram rows"));
            }
            let z = log_sum_exp(r);
            logs.extend(r.iter().map(|v| v - z));
        }
        Self::new(rows.len(), k, logs)
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    /// `|V'|`.
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// `ln p_t(v)` for 0-based frame `t`.
    #[inline]
    pub fn log_prob(&self, t: usize, v: usize) -> f64 {
        self.log_probs[t * self.num_labels + v]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.log_probs[t * self.num_labels..(t + 1) * self.num_labels]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.log_probs.chunks(self.num_labels)
    }

    /// Text layout: `"T' K"`, then `T'` rows of `K` natural-log probabilities.
    pub fn parse<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::data("posteriorgram file is empty"))??;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let [t, k] = dims[..] else {
            return Err(Error::data(format!("bad posteriorgram header {header:?}")));
        };
        let t: usize = t
            .parse()
            .map_err(|_| Error::data(format!("bad frame count {t:?}")))?;
        let k: usize = k
            .parse()
            .map_err(|_| Error::data(format!("bad label count {k:?}")))?;
        let mut values = Vec::new();
        for i in 0..t {
            let line = lines
                .next()
                .ok_or_else(|| Error::data(format!("posteriorgram ends before frame {}", i + 1)))??;
            let before = values.len();
            for tok in line.split_whitespace() {
                let v = match tok {
                    "-inf" | "-Inf" | "-INF" => f64::NEG_INFINITY,
                    _ => tok
                        .parse::<f64>()
                        .map_err(|_| Error::data(format!("bad value {tok:?} in frame {}", i + 1)))?,
                };
                values.push(v);
            }
            if values.len() - before != k {
                return Err(Error::data(format!(
                    "frame {} has {} values, expected {k}",
                    i + 1,
                    values.len() - before
                )));
            }
        }
        for rest in lines {
            if !rest?.trim().is_empty() {
                return Err(Error::data("trailing content after the last frame"));
            }
        }
        Self::new(t, k, values)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.num_frames, self.num_labels);
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}
