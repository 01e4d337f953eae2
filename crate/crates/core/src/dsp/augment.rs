use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FeatureMatrix;

/// SpecAugment masking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSpec {
    /// Maximum time-mask width in frames.
    pub max_time_mask: usize,
    /// Maximum frequency-mask width in channels.
    pub max_freq_mask: usize,
    pub num_time_masks: usize,
    pub num_freq_masks: usize,
    pub seed: u64,
}

impl MaskSpec {
    pub fn new(max_time_mask: usize, max_freq_mask: usize, seed: u64) -> Self {
        Self {
            max_time_mask,
            max_freq_mask,
            num_time_masks: 1,
            num_freq_masks: 1,
            seed,
        }
    }
}

/// Zeroes random time bands, then random frequency bands.
///
/// Each time mask draws a width `tau` uniformly from `0..=max_time_mask` and
/// then a start uniformly from `0..T`; frames `[start, min(start + tau, T))`
/// are zeroed. Frequency masks do the same over channels. All draws come from
/// a ChaCha8 stream seeded with `m.seed`, in that order.
pub fn spec_augment(f: &FeatureMatrix, m: &MaskSpec) -> FeatureMatrix {
    let mut out = f.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    let (frames, dim) = (f.num_frames, f.dim);

    for _ in 0..m.num_time_masks {
        let width = rng.gen_range(0..=m.max_time_mask);
        if frames == 0 {
            continue;
        }
        let start = rng.gen_range(0..frames);
        let end = start.saturating_add(width).min(frames);
        for t in start..end {
            out.data[t * dim..(t + 1) * dim].fill(0.0);
        }
    }
    for _ in 0..m.num_freq_masks {
        let width = rng.gen_range(0..=m.max_freq_mask);
        let start = rng.gen_range(0..dim);
        let end = start.saturating_add(width).min(dim);
        for t in 0..frames {
            out.data[t * dim + start..t * dim + end].fill(0.0);
        }
    }
    out
}
