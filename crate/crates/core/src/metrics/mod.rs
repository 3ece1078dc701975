//! Per-slice performance measures.
//!
//! Everything here works on [`Scored`] examples: a score in [0, 1] and a gold
//! label. A record is predicted positive iff `score >= threshold`, everywhere.

mod auc;
mod confusion;
mod parity;
mod summary;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::EvaluationRecord;

pub use auc::{auc, pinned_auc, pinned_sample, PinnedAuc};
pub use confusion::{
    confusion_at_threshold, default_grid, error_rates, threshold_sweep, ConfusionCounts,
    ErrorRates, SweepEntry, ThresholdSweep,
};
pub use parity::{parity_gaps, MaxGaps, ParityEntry, ParityInput, ParityReport};
pub(crate) use summary::quantile_sorted;
pub use summary::{score_summary, ScoreSummary};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("record `{0}` has no score")]
    Unscored(String),
    #[error("no scores to summarise")]
    EmptyScores,
    #[error("invalid threshold grid: {0}")]
    BadGrid(String),
    #[error("pinned AUC needs a non-empty {0}")]
    EmptyPinnedInput(&'static str),
    #[error("parity needs at least two eligible slices, found {0}")]
    TooFewSlices(usize),
}

/// A scored example reduced to what the metrics need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub score: f64,
    pub positive: bool,
}

impl Scored {
    pub fn new(score: f64, positive: bool) -> Self {
        Self { score, positive }
    }

    pub fn from_record(r: &EvaluationRecord) -> Result<Self, MetricError> {
        r.score
            .map(|score| Scored {
                score,
                positive: r.gold_label.is_positive(),
            })
            .ok_or_else(|| MetricError::Unscored(r.id.clone()))
    }

    pub fn collect<'a>(
        records: impl IntoIterator<Item = &'a EvaluationRecord>,
    ) -> Result<Vec<Scored>, MetricError> {
        records.into_iter().map(Scored::from_record).collect()
    }
}

/// Stable metric identifiers used in card JSON and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "fpr")]
    Fpr,
    #[serde(rename = "fnr")]
    Fnr,
    #[serde(rename = "fdr")]
    Fdr,
    #[serde(rename = "for")]
    For,
    #[serde(rename = "auc")]
    Auc,
    #[serde(rename = "pinned_auc")]
    PinnedAuc,
    #[serde(rename = "score_summary")]
    ScoreSummary,
}

impl MetricId {
    pub const ALL: [MetricId; 7] = [
        MetricId::Fpr,
        MetricId::Fnr,
        MetricId::Fdr,
        MetricId::For,
        MetricId::Auc,
        MetricId::PinnedAuc,
        MetricId::ScoreSummary,
    ];

    pub const RATES: [MetricId; 4] = [MetricId::Fpr, MetricId::Fnr, MetricId::Fdr, MetricId::For];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Fpr => "fpr",
            MetricId::Fnr => "fnr",
            MetricId::Fdr => "fdr",
            MetricId::For => "for",
            MetricId::Auc => "auc",
            MetricId::PinnedAuc => "pinned_auc",
            MetricId::ScoreSummary => "score_summary",
        }
    }

    /// Confusion-matrix rates, evaluated at a decision threshold.
    pub fn is_rate(self) -> bool {
        Self::RATES.contains(&self)
    }

    pub fn display_name(self) -> &'static str {
        match self {
            MetricId::Fpr => "FPR",
            MetricId::Fnr => "FNR",
            MetricId::Fdr => "FDR",
            MetricId::For => "FOR",
            MetricId::Auc => "AUC",
            MetricId::PinnedAuc => "Pinned AUC",
            MetricId::ScoreSummary => "Score summary",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// A metric value, or an explicit marker that it is undefined (zero
/// denominator, missing class). Serialises as a number or `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MetricValue {
    Defined(f64),
    #[default]
    Undefined,
}

impl MetricValue {
    pub fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            MetricValue::Undefined
        } else {
            MetricValue::Defined(num as f64 / den as f64)
        }
    }

    pub fn get(self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(v),
            MetricValue::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, MetricValue::Defined(_))
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        match self {
            MetricValue::Defined(v) => MetricValue::Defined(f(v)),
            MetricValue::Undefined => MetricValue::Undefined,
        }
    }
}

impl From<Option<f64>> for MetricValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(MetricValue::Undefined, MetricValue::Defined)
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            MetricValue::Defined(v) => serializer.serialize_f64(*v),
            MetricValue::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(MetricValue::Defined(v)),
            Raw::Str(s) if s == "undefined" => Ok(MetricValue::Undefined),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"undefined\", got \"{s}\""
            ))),
        }
    }
}
