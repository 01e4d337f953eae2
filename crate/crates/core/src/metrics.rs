//! Word error rate over caller-tokenized sequences.

use crate::error::{Error, Result};

/// Edit operations of a minimal alignment plus the reference length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `errors / ref_len`; `+inf` for an empty reference with errors, 0 when
    /// both are empty.
    pub fn rate(&self) -> f64 {
        match (self.errors(), self.ref_len) {
            (0, _) => 0.0,
            (_, 0) => f64::INFINITY,
            (e, n) => e as f64 / n as f64,
        }
    }
}

impl std::ops::Add for EditCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            substitutions: self.substitutions + o.substitutions,
            deletions: self.deletions + o.deletions,
            insertions: self.insertions + o.insertions,
            ref_len: self.ref_len + o.ref_len,
        }
    }
}

/// Unit-cost Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// Aligns `hyp` against `reference`. When several minimal alignments exist
/// the backtrace prefers substitution, then insertion, then deletion.
pub fn wer<T: PartialEq>(reference: &[T], hyp: &[T]) -> (EditCounts, f64) {
    let (n, m) = (reference.len(), hyp.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(reference[i - 1] != hyp[j - 1]);
            d[i][j] = sub.min(d[i][j - 1] + 1).min(d[i - 1][j] + 1);
        }
    }

    let mut counts = EditCounts {
        ref_len: n,
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hyp[j - 1];
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                if !same {
                    counts.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i][j] == d[i][j - 1] + 1 {
            counts.insertions += 1;
            j -= 1;
        } else {
            counts.deletions += 1;
            i -= 1;
        }
    }
    let rate = counts.rate();
    (counts, rate)
}

/// Pooled WER: total errors over total reference length.
pub fn corpus_wer<T: PartialEq, R: AsRef<[T]>>(pairs: &[(R, R)]) -> Result<(EditCounts, f64)> {
    let total = pairs
        .iter()
        .map(|(r, h)| wer(r.as_ref(), h.as_ref()).0)
        .fold(EditCounts::default(), |acc, c| acc + c);
    if total.ref_len == 0 {
        return Err(Error::usage("corpus WER needs at least one reference token"));
    }
    Ok((total, total.errors() as f64 / total.ref_len as f64))
}

/// Whitespace tokenization.
pub fn tokenize(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}
