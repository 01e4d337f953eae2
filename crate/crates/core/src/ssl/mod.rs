//! Self-supervised speech objectives (quantized targets, contrastive and
//! diversity losses) and representation analysis (CCA, clustered mutual
//! information).

mod cca;
mod mi;

pub use cca::{cca_corrs, cca_similarity, DEFAULT_REGULARIZATION};
pub use mi::{kmeans, mutual_information, KMEANS_ITERATIONS};

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// `G` groups of `V` entries, each of length `d / G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebooks {
    num_groups: usize,
    entries_per_group: usize,
    entry_dim: usize,
    entries: Vec<f64>,
}

impl Codebooks {
    /// `entries` is laid out group-major, then entry, then component.
    pub fn new(num_groups: usize, entries_per_group: usize, entry_dim: usize, entries: Vec<f64>) -> Result<Self> {
        if num_groups == 0 || entries_per_group == 0 || entry_dim == 0 {
            return Err(Error::usage("codebook dimensions must be positive"));
        }
        if entries.len() != num_groups * entries_per_group * entry_dim {
            return Err(Error::usage(format!(
                "expected {} codebook values, got {}",
                num_groups * entries_per_group * entry_dim,
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("codebook entries must be finite"));
        }
        Ok(Self {
            num_groups,
            entries_per_group,
            entry_dim,
            entries,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn entries_per_group(&self) -> usize {
        self.entries_per_group
    }

    /// `d`, the length of a quantized vector.
    pub fn dim(&self) -> usize {
        self.num_groups * self.entry_dim
    }

    pub fn entry(&self, group: usize, index: usize) -> &[f64] {
        let start = (group * self.entries_per_group + index) * self.entry_dim;
        &self.entries[start..start + self.entry_dim]
    }
}

/// Concatenates the selected entry of every group.
pub fn quantize_concat(selection: &[usize], cb: &Codebooks) -> Result<Vec<f64>> {
    if selection.len() != cb.num_groups {
        return Err(Error::usage(format!(
            "expected one selection per group ({}), got {}",
            cb.num_groups,
            selection.len()
        )));
    }
    let mut out = Vec::with_capacity(cb.dim());
    for (g, &v) in selection.iter().enumerate() {
        if v >= cb.entries_per_group {
            return Err(Error::usage(format!(
                "selection {v} out of range for {} entries",
                cb.entries_per_group
            )));
        }
        out.extend_from_slice(cb.entry(g, v));
    }
    Ok(out)
}

/// Context vector, its true quantized target and distractors.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveBatch {
    pub context: Vec<f64>,
    pub target: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
    pub temperature: f64,
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::usage("vectors differ in length"));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::data("cosine similarity of a zero-norm vector"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// `-ln softmax_j(sim(c, q_j) / kappa)` at the true target.
pub fn contrastive_loss(b: &ContrastiveBatch) -> Result<f64> {
    if !(b.temperature > 0.0 && b.temperature.is_finite()) {
        return Err(Error::usage("temperature must be a finite value > 0"));
    }
    let all_finite = b
        .context
        .iter()
        .chain(&b.target)
        .chain(b.negatives.iter().flatten())
        .all(|x| x.is_finite());
    if !all_finite {
        return Err(Error::data("contrastive inputs must be finite"));
    }
    let mut logits = Vec::with_capacity(b.negatives.len() + 1);
    logits.push(cosine_similarity(&b.context, &b.target)? / b.temperature);
    for n in &b.negatives {
        logits.push(cosine_similarity(&b.context, n)? / b.temperature);
    }
    if logits.len() == 1 {
        return Ok(0.0);
    }
    Ok((log_sum_exp(&logits) - logits[0]).max(0.0))
}

/// Average selection probability of every entry, one row per group.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookUsage {
    rows: Vec<Vec<f64>>,
}

impl CodebookUsage {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let v = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || v == 0 || rows.iter().any(|r| r.len() != v) {
            return Err(Error::usage("usage needs G >= 1 rows of equal length V >= 1"));
        }
        for r in &rows {
            if r.iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
                return Err(Error::data("usage probabilities must lie in [0, 1]"));
            }
            if (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::data("every usage row must sum to 1"));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// `(G / V) * sum_g sum_v p ln p`, with `0 ln 0 = 0`.
pub fn diversity_loss(u: &CodebookUsage) -> f64 {
    let g = u.rows.len() as f64;
    let v = u.rows[0].len() as f64;
    let s: f64 = u
        .rows
        .iter()
        .flatten()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum();
    g / v * s
}

/// `L_contrastive + alpha * L_diversity`.
pub fn ssl_objective(b: &ContrastiveBatch, u: &CodebookUsage, alpha: f64) -> Result<f64> {
    Ok(contrastive_loss(b)? + alpha * diversity_loss(u))
}
