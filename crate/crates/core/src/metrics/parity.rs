use serde::{Deserialize, Serialize};

use super::{ErrorRates, MetricError, MetricId, MetricValue};
use crate::slicer::SliceKey;

#[derive(Debug, Clone, PartialEq)]
pub struct ParityInput {
    pub key: SliceKey,
    pub rates: ErrorRates,
    pub suppressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityEntry {
    pub key: SliceKey,
    pub fpr: f64,
    pub fnr: f64,
}

/// Largest pairwise difference per rate over the eligible slices where that
/// rate is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxGaps {
    pub fpr: MetricValue,
    pub fnr: MetricValue,
    pub fdr: MetricValue,
    #[serde(rename = "for")]
    pub for_: MetricValue,
}

/// Cross-slice gaps for one factor tuple at one threshold. A zero
/// `opportunity_gap` means equal false negative rates on this evaluation set;
/// a zero `odds_gap` means equal false negative and false positive rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityReport {
    pub factors: Vec<String>,
    pub threshold: f64,
    pub slices: Vec<ParityEntry>,
    pub max_gaps: MaxGaps,
    pub opportunity_gap: f64,
    pub odds_gap: f64,
}

fn spread(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (count, lo, hi) = values.fold(
        (0usize, f64::INFINITY, f64::NEG_INFINITY),
        |(n, lo, hi), v| (n + 1, lo.min(v), hi.max(v)),
    );
    (count >= 2).then_some(hi - lo)
}

/// Slices are eligible when not suppressed and both FNR and FPR are defined.
pub fn parity_gaps(
    factors: &[String],
    threshold: f64,
    inputs: &[ParityInput],
) -> Result<ParityReport, MetricError> {
    let eligible: Vec<&ParityInput> = inputs
        .iter()
        .filter(|p| !p.suppressed && p.rates.fnr.is_defined() && p.rates.fpr.is_defined())
        .collect();
    if eligible.len() < 2 {
        return Err(MetricError::TooFewSlices(eligible.len()));
    }
    let gap = |m: MetricId| -> MetricValue {
        spread(eligible.iter().filter_map(|p| p.rates.get(m).get())).into()
    };
    let max_gaps = MaxGaps {
        fpr: gap(MetricId::Fpr),
        fnr: gap(MetricId::Fnr),
        fdr: gap(MetricId::Fdr),
        for_: gap(MetricId::For),
    };
    let opportunity_gap = max_gaps.fnr.get().expect("two defined FNRs");
    let fpr_gap = max_gaps.fpr.get().expect("two defined FPRs");
    Ok(ParityReport {
        factors: factors.to_vec(),
        threshold,
        slices: eligible
            .iter()
            .map(|p| ParityEntry {
                key: p.key.clone(),
                fpr: p.rates.fpr.get().unwrap_or_default(),
                fnr: p.rates.fnr.get().unwrap_or_default(),
            })
            .collect(),
        max_gaps,
        opportunity_gap,
        odds_gap: opportunity_gap.max(fpr_gap),
    })
}
