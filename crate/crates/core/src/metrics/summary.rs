use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Central tendency and dispersion of a slice's scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSummary {
    pub mean: f64,
    pub median: f64,
    /// Most frequent score after rounding to two decimals; ties go to the
    /// smallest value.
    pub mode: f64,
    pub range: f64,
    pub q1: f64,
    pub q3: f64,
    /// Mean absolute deviation around the mean.
    pub mean_absolute_deviation: f64,
    /// Sample variance (n - 1 denominator); 0 for a single score.
    pub variance: f64,
    pub std_dev: f64,
}

impl ScoreSummary {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mean: f(self.mean),
            median: f(self.median),
            mode: f(self.mode),
            range: f(self.range),
            q1: f(self.q1),
            q3: f(self.q3),
            mean_absolute_deviation: f(self.mean_absolute_deviation),
            variance: f(self.variance),
            std_dev: f(self.std_dev),
        }
    }
}

/// Linear-interpolation quantile of sorted data (position `(n - 1) * p`).
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn score_summary(scores: &[f64]) -> Result<ScoreSummary, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyScores);
    }
    let n = scores.len() as f64;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mean = scores.iter().sum::<f64>() / n;
    let variance = if scores.len() > 1 {
        scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mean_absolute_deviation = scores.iter().map(|s| (s - mean).abs()).sum::<f64>() / n;

    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for s in scores {
        *bins.entry((s * 100.0).round() as i64).or_default() += 1;
    }
    // BTreeMap iterates ascending, so the first maximum is the smallest bin.
    let (mode_bin, _) = bins.iter().fold((0i64, 0usize), |best, (&bin, &count)| {
        if count > best.1 {
            (bin, count)
        } else {
            best
        }
    });

    Ok(ScoreSummary {
        mean,
        median: quantile_sorted(&sorted, 0.5),
        mode: mode_bin as f64 / 100.0,
        range: sorted[sorted.len() - 1] - sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        mean_absolute_deviation,
        variance,
        std_dev: variance.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_scores() {
        let s = score_summary(&[0.2, 0.2, 0.2]).unwrap();
        assert!((s.mean - 0.2).abs() < 1e-15);
        assert_eq!(s.median, 0.2);
        assert_eq!(s.mode, 0.2);
        assert_eq!(s.range, 0.0);
        assert!(s.variance.abs() < 1e-30);
    }

    #[test]
    fn two_points() {
        let s = score_summary(&[0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.range, 1.0);
        assert_eq!(s.median, 0.5);
        assert_eq!(s.q1, 0.25);
        assert_eq!(s.q3, 0.75);
        assert_eq!(s.variance, 0.5);
        // Tie between bins 0 and 100 goes to the smaller.
        assert_eq!(s.mode, 0.0);
    }

    #[test]
    fn single_score_has_zero_variance() {
        let s = score_summary(&[0.7]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.q1, 0.7);
        assert!(score_summary(&[]).is_err());
    }

    #[test]
    fn fifty_random_scores_match_naive_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let scores: Vec<f64> = (0..50).map(|_| rng.gen()).collect();
        let s = score_summary(&scores).unwrap();

        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let mean: f64 = sorted.iter().sum::<f64>() / n;
        // Even count: median is the average of the two middle values.
        let median = (sorted[24] + sorted[25]) / 2.0;
        // Position 12.25 and 36.75 for n = 50.
        let q1 = sorted[12] + 0.25 * (sorted[13] - sorted[12]);
        let q3 = sorted[36] + 0.75 * (sorted[37] - sorted[36]);
        let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let mad = sorted.iter().map(|x| (x - mean).abs()).sum::<f64>() / n;

        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(s.mean, mean));
        assert!(close(s.median, median));
        assert!(close(s.q1, q1));
        assert!(close(s.q3, q3));
        assert!(close(s.variance, var));
        assert!(close(s.std_dev, var.sqrt()));
        assert!(close(s.mean_absolute_deviation, mad));
        assert!(close(s.range, sorted[49] - sorted[0]));
        assert!(s.q1 <= s.median && s.median <= s.q3);

        let mut counts = std::collections::HashMap::new();
        for x in &scores {
            *counts.entry((x * 100.0).round() as i64).or_insert(0) += 1;
        }
        let best = counts.values().max().unwrap();
        let mode_bin = counts
            .iter()
            .filter(|(_, c)| *c == best)
            .map(|(b, _)| *b)
            .min()
            .unwrap();
        assert_eq!(s.mode, mode_bin as f64 / 100.0);
    }
}
