use serde::{Deserialize, Serialize};

use super::{MetricError, MetricId, MetricValue, Scored};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Numerator and denominator of a confusion-matrix rate.
    pub fn fraction(&self, metric: MetricId) -> Option<(u64, u64)> {
        let c = self;
        match metric {
            MetricId::Fpr => Some((c.fp, c.fp + c.tn)),
            MetricId::Fnr => Some((c.fn_, c.fn_ + c.tp)),
            MetricId::Fdr => Some((c.fp, c.fp + c.tp)),
            MetricId::For => Some((c.fn_, c.fn_ + c.tn)),
            _ => None,
        }
    }

    pub fn rate(&self, metric: MetricId) -> MetricValue {
        self.fraction(metric)
            .map_or(MetricValue::Undefined, |(n, d)| MetricValue::ratio(n, d))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorRates {
    pub fpr: MetricValue,
    pub fnr: MetricValue,
    pub fdr: MetricValue,
    #[serde(rename = "for")]
    pub for_: MetricValue,
}

impl ErrorRates {
    pub fn get(&self, metric: MetricId) -> MetricValue {
        match metric {
            MetricId::Fpr => self.fpr,
            MetricId::Fnr => self.fnr,
            MetricId::Fdr => self.fdr,
            MetricId::For => self.for_,
            _ => MetricValue::Undefined,
        }
    }

    pub fn map(&self, f: impl Fn(MetricValue) -> MetricValue) -> Self {
        Self {
            fpr: f(self.fpr),
            fnr: f(self.fnr),
            fdr: f(self.fdr),
            for_: f(self.for_),
        }
    }
}

pub fn confusion_at_threshold(examples: &[Scored], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for e in examples {
        match (e.score >= threshold, e.positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

pub fn error_rates(c: &ConfusionCounts) -> ErrorRates {
    ErrorRates {
        fpr: c.rate(MetricId::Fpr),
        fnr: c.rate(MetricId::Fnr),
        fdr: c.rate(MetricId::Fdr),
        for_: c.rate(MetricId::For),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fpr: MetricValue,
    pub fnr: MetricValue,
    pub fdr: MetricValue,
    #[serde(rename = "for")]
    pub for_: MetricValue,
}

impl SweepEntry {
    pub fn new(c: ConfusionCounts, r: ErrorRates) -> Self {
        Self {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            tn: c.tn,
            fpr: r.fpr,
            fnr: r.fnr,
            fdr: r.fdr,
            for_: r.for_,
        }
    }

    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            tn: self.tn,
        }
    }

    pub fn rates(&self) -> ErrorRates {
        ErrorRates {
            fpr: self.fpr,
            fnr: self.fnr,
            fdr: self.fdr,
            for_: self.for_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSweep {
    pub thresholds: Vec<f64>,
    pub entries: Vec<SweepEntry>,
}

impl ThresholdSweep {
    pub fn entry_at(&self, threshold: f64) -> Option<&SweepEntry> {
        self.thresholds
            .iter()
            .position(|t| *t == threshold)
            .map(|i| &self.entries[i])
    }
}

/// Evenly spaced grid over [0, 1]. `step` should divide 1; the point count
/// is rounded to the nearest integer so 0.01 gives exactly 101 thresholds.
pub fn default_grid(step: f64) -> Result<Vec<f64>, MetricError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(MetricError::BadGrid(format!("step {step} not in (0, 1]")));
    }
    let n = (1.0 / step).round() as u64;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<(), MetricError> {
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(MetricError::BadGrid(format!(
            "threshold {t} outside [0, 1]"
        )));
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
        return Err(MetricError::BadGrid(format!(
            "thresholds must be strictly ascending ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn threshold_sweep(examples: &[Scored], grid: &[f64]) -> Result<ThresholdSweep, MetricError> {
    check_grid(grid)?;
    let mut pos: Vec<f64> = examples
        .iter()
        .filter(|e| e.positive)
        .map(|e| e.score)
        .collect();
    let mut neg: Vec<f64> = examples
        .iter()
        .filter(|e| !e.positive)
        .map(|e| e.score)
        .collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let entries = grid
        .iter()
        .map(|&t| {
            let below_pos = pos.partition_point(|s| *s < t) as u64;
            let below_neg = neg.partition_point(|s| *s < t) as u64;
            let c = ConfusionCounts {
                tp: pos.len() as u64 - below_pos,
                fn_: below_pos,
                fp: neg.len() as u64 - below_neg,
                tn: below_neg,
            };
            SweepEntry::new(c, error_rates(&c))
        })
        .collect();
    Ok(ThresholdSweep {
        thresholds: grid.to_vec(),
        entries,
    })
}
