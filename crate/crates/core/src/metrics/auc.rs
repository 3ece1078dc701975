use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MetricError, MetricValue, Scored};

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs where the
/// positive scores higher, ties counting one half. Computed from mid-ranks.
pub fn auc(examples: &[Scored]) -> MetricValue {
    let n_pos = examples.iter().filter(|e| e.positive).count();
    let n_neg = examples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return MetricValue::Undefined;
    }
    let mut sorted: Vec<&Scored> = examples.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    // Sum of (1-based) mid-ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1].score == sorted[i].score {
            j += 1;
        }
        let mid_rank = (i + j + 2) as f64 / 2.0;
        let tied_pos = sorted[i..=j].iter().filter(|e| e.positive).count();
        rank_sum += mid_rank * tied_pos as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    MetricValue::Defined(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedAuc {
    pub value: MetricValue,
    pub sample_size: usize,
    pub seed: u64,
}

/// Indices into the background for a pinned dataset: `subgroup_len` draws,
/// without replacement when the background is large enough, with replacement
/// otherwise.
pub fn pinned_sample(subgroup_len: usize, background_len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if background_len >= subgroup_len {
        index::sample(&mut rng, background_len, subgroup_len).into_vec()
    } else {
        (0..subgroup_len)
            .map(|_| rng.gen_range(0..background_len))
            .collect()
    }
}

/// AUC of the subgroup pooled with an equal-size background sample.
pub fn pinned_auc(
    subgroup: &[Scored],
    background: &[Scored],
    seed: u64,
) -> Result<PinnedAuc, MetricError> {
    if subgroup.is_empty() {
        return Err(MetricError::EmptyPinnedInput("subgroup"));
    }
    if background.is_empty() {
        return Err(MetricError::EmptyPinnedInput("background"));
    }
    let sample = pinned_sample(subgroup.len(), background.len(), seed);
    let mut pinned = Vec::with_capacity(subgroup.len() * 2);
    pinned.extend_from_slice(subgroup);
    pinned.extend(sample.iter().map(|&i| background[i]));
    Ok(PinnedAuc {
        value: auc(&pinned),
        sample_size: sample.len(),
        seed,
    })
}
