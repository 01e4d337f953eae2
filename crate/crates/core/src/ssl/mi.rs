use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};

/// Lloyd iterations run by [`kmeans`].
pub const KMEANS_ITERATIONS: usize = 50;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, cent) in centroids.iter().enumerate() {
        let d = sq_dist(row, cent);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Cluster index of every row: seeded k-means++ initialization followed by
/// a fixed number of Lloyd iterations. Empty clusters keep their centroid.
pub fn kmeans(features: &FeatureMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = features.num_frames;
    if k == 0 {
        return Err(Error::usage("k must be at least 1"));
    }
    if k > n {
        return Err(Error::usage(format!("k = {k} exceeds the {n} rows")));
    }
    let rows: Vec<&[f64]> = features.rows().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = vec![rows[rng.gen_range(0..n)].to_vec()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if u < acc && *d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = rows[pick].to_vec();
        for (d, r) in d2.iter_mut().zip(&rows) {
            *d = d.min(sq_dist(r, &c));
        }
        centroids.push(c);
    }

    let dim = features.dim;
    let mut assign: Vec<usize> = rows.iter().map(|r| nearest(r, &centroids)).collect();
    for _ in 0..KMEANS_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &a) in rows.iter().zip(&assign) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(r.iter()) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        assign = rows.iter().map(|r| nearest(r, &centroids)).collect();
    }
    Ok(assign)
}

/// Mutual information (nats) between k-means clusters of `features` and
/// `labels`, from their co-occurrence table.
pub fn mutual_information(features: &FeatureMatrix, labels: &[i64], k: usize, seed: u64) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::usage("labels must not be empty"));
    }
    if labels.len() != features.num_frames {
        return Err(Error::usage(format!(
            "{} labels for {} feature rows",
            labels.len(),
            features.num_frames
        )));
    }
    let clusters = kmeans(features, k, seed)?;
    let mut label_ids: HashMap<i64, usize> = HashMap::new();
    for l in labels {
        let next = label_ids.len();
        label_ids.entry(*l).or_insert(next);
    }
    let nl = label_ids.len();
    let mut joint = vec![0usize; k * nl];
    let mut pc = vec![0usize; k];
    let mut pl = vec![0usize; nl];
    for (c, l) in clusters.iter().zip(labels) {
        let l = label_ids[l];
        joint[c * nl + l] += 1;
        pc[*c] += 1;
        pl[l] += 1;
    }
    let n = labels.len() as f64;
    let mut mi = 0.0;
    for c in 0..k {
        for l in 0..nl {
            let j = joint[c * nl + l];
            if j > 0 {
                let j = j as f64;
                mi += j / n * (j * n / (pc[c] as f64 * pl[l] as f64)).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}
