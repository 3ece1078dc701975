//! Confidence intervals: percentile bootstrap over the records of a slice,
//! and Beta-posterior intervals for confusion-matrix proportions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::metrics::quantile_sorted;
use crate::metrics::{self, confusion_at_threshold, MetricId, MetricValue, Scored};

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;
/// Jeffreys prior, Beta(0.5, 0.5).
pub const DEFAULT_PRIOR: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum UncertaintyError {
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error("confidence level {0} is not in (0, 1)")]
    BadLevel(f64),
    #[error("prior {0} must be positive")]
    BadPrior(f64),
    #[error("no trials: the proportion is undefined")]
    NoTrials,
    #[error("{successes} successes out of {trials} trials")]
    TooManySuccesses { successes: u64, trials: u64 },
    #[error("cannot resample an empty slice")]
    EmptySample,
    #[error("metric is undefined on the original slice")]
    UndefinedPoint,
    #[error("metric undefined in all {0} bootstrap replicates")]
    AllResamplesUndefined(usize),
    #[error("{0} cannot be bootstrapped on its own")]
    Unsupported(MetricId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Bootstrap,
    BetaPosterior,
}

impl std::str::FromStr for CiMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "bootstrap" => Ok(CiMethod::Bootstrap),
            "beta_posterior" | "beta" => Ok(CiMethod::BetaPosterior),
            other => Err(format!("unknown interval method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CiParams {
    Bootstrap {
        replicates: usize,
        /// Replicates where the metric was undefined and was left out.
        dropped: usize,
        seed: u64,
    },
    BetaPosterior {
        prior: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    pub params: CiParams,
    /// Set when a percentile bound fell on the wrong side of the point
    /// estimate and was moved onto it.
    pub clamped: bool,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Derives an independent seed for one named scope (slice, metric, threshold)
/// from the root seed: the first eight bytes of SHA-256(root || scope).
pub fn sub_seed(root: u64, scope: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(scope.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn check_level(level: f64) -> Result<(), UncertaintyError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(UncertaintyError::BadLevel(level))
    }
}

/// Percentile bootstrap. Each replicate resamples `items` with replacement
/// (same size) from its own ChaCha stream, so results do not depend on how
/// replicates are scheduled across threads. The statistic receives the
/// replicate's generator for any extra randomness it needs.
pub fn percentile_bootstrap<T, F>(
    items: &[T],
    point: MetricValue,
    replicates: usize,
    level: f64,
    seed: u64,
    statistic: F,
) -> Result<IntervalEstimate, UncertaintyError>
where
    T: Copy + Send + Sync,
    F: Fn(&[T], &mut ChaCha8Rng) -> MetricValue + Sync,
{
    if replicates == 0 {
        return Err(UncertaintyError::NoReplicates);
    }
    check_level(level)?;
    if items.is_empty() {
        return Err(UncertaintyError::EmptySample);
    }
    let point = point.get().ok_or(UncertaintyError::UndefinedPoint)?;

    let draws: Vec<MetricValue> = (0..replicates)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(items.len()),
            |buf, rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rep as u64);
                buf.clear();
                buf.extend((0..items.len()).map(|_| items[rng.gen_range(0..items.len())]));
                statistic(buf, &mut rng)
            },
        )
        .collect();

    let mut values: Vec<f64> = draws.iter().filter_map(|v| v.get()).collect();
    let dropped = replicates - values.len();
    if values.is_empty() {
        return Err(UncertaintyError::AllResamplesUndefined(replicates));
    }
    values.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let mut lower = quantile_sorted(&values, alpha);
    let mut upper = quantile_sorted(&values, 1.0 - alpha);
    let mut clamped = false;
    if lower > point {
        lower = point;
        clamped = true;
    }
    if upper < point {
        upper = point;
        clamped = true;
    }
    Ok(IntervalEstimate {
        point,
        lower,
        upper,
        level,
        method: CiMethod::Bootstrap,
        params: CiParams::Bootstrap {
            replicates,
            dropped,
            seed,
        },
        clamped,
    })
}

/// Bootstrap interval for a confusion-matrix rate at `threshold`, or for AUC
/// (threshold ignored).
pub fn bootstrap_ci(
    examples: &[Scored],
    metric: MetricId,
    threshold: f64,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<IntervalEstimate, UncertaintyError> {
    let statistic = |sample: &[Scored]| -> MetricValue {
        match metric {
            MetricId::Auc => metrics::auc(sample),
            m => confusion_at_threshold(sample, threshold).rate(m),
        }
    };
    if !(metric.is_rate() || metric == MetricId::Auc) {
        return Err(UncertaintyError::Unsupported(metric));
    }
    let point = statistic(examples);
    percentile_bootstrap(examples, point, replicates, level, seed, |s, _| {
        statistic(s)
    })
}

/// Bootstrap interval for pinned AUC: each replicate resamples the subgroup
/// and draws a fresh background sample.
pub fn bootstrap_pinned_auc(
    subgroup: &[Scored],
    background: &[Scored],
    point: MetricValue,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<IntervalEstimate, UncertaintyError> {
    if background.is_empty() {
        return Err(UncertaintyError::EmptySample);
    }
    percentile_bootstrap(subgroup, point, replicates, level, seed, |sample, rng| {
        let pinned_seed = rng.gen();
        metrics::pinned_auc(sample, background, pinned_seed)
            .map(|p| p.value)
            .unwrap_or(MetricValue::Undefined)
    })
}

/// Inverse of the regularized incomplete beta function by bisection.
pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equal-tailed posterior interval for `successes / trials` under a
/// symmetric Beta(`prior`, `prior`) prior.
pub fn beta_posterior_ci(
    successes: u64,
    trials: u64,
    level: f64,
    prior: f64,
) -> Result<IntervalEstimate, UncertaintyError> {
    check_level(level)?;
    if !(prior > 0.0 && prior.is_finite()) {
        return Err(UncertaintyError::BadPrior(prior));
    }
    if trials == 0 {
        return Err(UncertaintyError::NoTrials);
    }
    if successes > trials {
        return Err(UncertaintyError::TooManySuccesses { successes, trials });
    }
    let a = successes as f64 + prior;
    let b = (trials - successes) as f64 + prior;
    let alpha = (1.0 - level) / 2.0;
    let point = successes as f64 / trials as f64;
    let mut lower = beta_quantile(a, b, alpha);
    let mut upper = beta_quantile(a, b, 1.0 - alpha);
    // Posterior quantiles bracket x/n except at the extremes (x = 0 or n).
    let mut clamped = false;
    if lower > point {
        lower = point;
        clamped = true;
    }
    if upper < point {
        upper = point;
        clamped = true;
    }
    Ok(IntervalEstimate {
        point,
        lower,
        upper,
        level,
        method: CiMethod::BetaPosterior,
        params: CiParams::BetaPosterior { prior },
        clamped,
    })
}
