//! Assembles the quantitative-analyses block of a card and renders whole
//! cards as Markdown, HTML or canonical JSON.

mod document;
mod html;
mod markdown;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{save_card, validate_card, MetricsSpec, ModelCard, ValidationReport};
use crate::ingest::EvaluationSet;
use crate::metrics::{
    self, auc, confusion_at_threshold, error_rates, parity_gaps, pinned_auc, score_summary,
    threshold_sweep, MetricError, MetricId, MetricValue, ParityInput, ParityReport, ScoreSummary,
    Scored, ThresholdSweep,
};
use crate::slicer::{self, Slice, SliceError, SliceKey, DEFAULT_MIN_CELL};
use crate::uncertainty::{
    beta_posterior_ci, bootstrap_ci, bootstrap_pinned_auc, sub_seed, CiMethod, CiParams,
    IntervalEstimate, UncertaintyError,
};

pub use html::{render_html, CARD_DATA_ID};
pub use markdown::render_markdown;

/// Default spacing of the threshold sweep.
pub const DEFAULT_SWEEP_STEP: f64 = 0.01;

/// Rounds to three decimals, ties to even on the decimal representation.
pub fn round3(x: f64) -> f64 {
    format!("{x:.3}").parse().expect("formatted float parses")
}

/// Everything that determines a computed block. Echoed into the card so the
/// block can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub dataset: String,
    pub metrics: Vec<MetricId>,
    pub thresholds: Vec<f64>,
    /// `None` disables the per-slice threshold sweep.
    pub sweep_step: Option<f64>,
    pub ci_method: CiMethod,
    pub replicates: usize,
    pub level: f64,
    pub prior: f64,
    /// Root seed; required when any interval is bootstrapped or pinned AUC
    /// is requested.
    pub seed: Option<u64>,
    pub min_cell: usize,
    pub factors: Vec<String>,
    pub intersections: Vec<Vec<String>>,
}

impl AnalysisConfig {
    /// Takes metrics, thresholds and the interval method from the card's
    /// metrics section. `seed` overrides the card's seed when given.
    pub fn from_metrics_spec(
        spec: &MetricsSpec,
        dataset: &str,
        factors: Vec<String>,
        intersections: Vec<Vec<String>>,
        seed: Option<u64>,
    ) -> Self {
        let v = &spec.variation_approach;
        Self {
            dataset: dataset.to_string(),
            metrics: spec.metric_ids(),
            thresholds: spec.decision_thresholds.clone(),
            sweep_step: Some(DEFAULT_SWEEP_STEP),
            ci_method: v.method,
            replicates: v.replicates,
            level: v.level,
            prior: v.prior,
            seed: seed.or(v.seed),
            min_cell: DEFAULT_MIN_CELL,
            factors,
            intersections,
        }
    }

    /// True when some interval will be drawn by resampling.
    pub fn needs_seed(&self) -> bool {
        self.metrics.iter().any(|m| match m {
            MetricId::Auc | MetricId::PinnedAuc => true,
            m if m.is_rate() => self.ci_method == CiMethod::Bootstrap,
            _ => false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricResult {
    pub metric: MetricId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub value: MetricValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_method: Option<CiMethod>,
    /// Bootstrap stream seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped_replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub clamped: bool,
    /// Pinned AUC only: background records drawn and the seed that drew them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_seed: Option<u64>,
    /// Why no interval is attached, when there is none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MetricResult {
    fn bare(metric: MetricId, threshold: Option<f64>, value: MetricValue) -> Self {
        Self {
            metric,
            threshold,
            value: value.map(round3),
            ci_lower: None,
            ci_upper: None,
            ci_level: None,
            ci_method: None,
            seed: None,
            replicates: None,
            dropped_replicates: None,
            prior: None,
            clamped: false,
            sample_size: None,
            sample_seed: None,
            note: None,
        }
    }

    fn with_interval(mut self, ci: Result<IntervalEstimate, UncertaintyError>) -> Self {
        match ci {
            Ok(ci) => {
                self.ci_lower = Some(round3(ci.lower));
                self.ci_upper = Some(round3(ci.upper));
                self.ci_level = Some(ci.level);
                self.ci_method = Some(ci.method);
                self.clamped = ci.clamped;
                match ci.params {
                    CiParams::Bootstrap {
                        replicates,
                        dropped,
                        seed,
                    } => {
                        self.seed = Some(seed);
                        self.replicates = Some(replicates);
                        self.dropped_replicates = Some(dropped);
                    }
                    CiParams::BetaPosterior { prior } => self.prior = Some(prior),
                }
            }
            Err(e) => self.note = Some(e.to_string()),
        }
        self
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        self.ci_lower.zip(self.ci_upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceResult {
    pub key: SliceKey,
    /// Withheld for suppressed slices.
    pub n: Option<usize>,
    pub suppressed: bool,
    pub metrics: Vec<MetricResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_summary: Option<ScoreSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<ThresholdSweep>,
}

impl SliceResult {
    pub fn metric(&self, metric: MetricId, threshold: Option<f64>) -> Option<&MetricResult> {
        self.metrics
            .iter()
            .find(|m| m.metric == metric && m.threshold == threshold)
    }
}

/// Results for one factor (unitary) or one factor tuple (intersectional).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorBreakdown {
    pub factors: Vec<String>,
    /// Records left out because a factor value is `unknown`.
    pub excluded: usize,
    pub slices: Vec<SliceResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantitativeAnalyses {
    pub version_label: String,
    pub config: AnalysisConfig,
    pub overall: SliceResult,
    pub unitary: Vec<FactorBreakdown>,
    pub intersectional: Vec<FactorBreakdown>,
    pub parity: Vec<ParityReport>,
}

impl QuantitativeAnalyses {
    pub fn all_slices(&self) -> impl Iterator<Item = &SliceResult> {
        std::iter::once(&self.overall).chain(
            self.unitary
                .iter()
                .chain(&self.intersectional)
                .flat_map(|b| b.slices.iter()),
        )
    }

    pub fn find_slice(&self, key: &SliceKey) -> Option<&SliceResult> {
        self.all_slices().find(|s| &s.key == key)
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("evaluation set `{0}` has unscored records; join scores first")]
    Unscored(String),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("a seed is required for bootstrap intervals and pinned AUC")]
    MissingSeed,
    #[error("card is incomplete:\n{0}")]
    Incomplete(ValidationReport),
}

fn check_config(config: &AnalysisConfig) -> Result<(), ReportError> {
    if config.metrics.is_empty() {
        return Err(ReportError::Config("no metrics selected".into()));
    }
    if config.metrics.iter().any(|m| m.is_rate()) && config.thresholds.is_empty() {
        return Err(ReportError::Config(
            "rate metrics need at least one threshold".into(),
        ));
    }
    metrics::threshold_sweep(&[], &config.thresholds)
        .map_err(|e| ReportError::Config(e.to_string()))?;
    if config.replicates == 0 {
        return Err(ReportError::Config("replicates must be at least 1".into()));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(ReportError::Config(format!(
            "level {} not in (0, 1)",
            config.level
        )));
    }
    if !(config.prior > 0.0 && config.prior.is_finite()) {
        return Err(ReportError::Config(format!(
            "prior {} must be positive",
            config.prior
        )));
    }
    if config.needs_seed() && config.seed.is_none() {
        return Err(ReportError::MissingSeed);
    }
    for (i, f) in config.factors.iter().enumerate() {
        if config.factors[..i].contains(f) {
            return Err(ReportError::Slice(SliceError::DuplicateFactor(f.clone())));
        }
    }
    Ok(())
}

struct Context<'a> {
    config: &'a AnalysisConfig,
    scored: Vec<Scored>,
    grid: Option<Vec<f64>>,
    seed: u64,
}

impl Context<'_> {
    fn slice_result(&self, slice: &Slice) -> Result<SliceResult, ReportError> {
        if slice.suppressed {
            return Ok(SliceResult {
                key: slice.key.clone(),
                n: None,
                suppressed: true,
                metrics: Vec::new(),
                score_summary: None,
                sweep: None,
            });
        }
        let cfg = self.config;
        let examples: Vec<Scored> = slice
            .member_indices
            .iter()
            .map(|&i| self.scored[i])
            .collect();
        let scope = slice.key.to_string();
        let mut results = Vec::new();

        for &t in &cfg.thresholds {
            let counts = confusion_at_threshold(&examples, t);
            for &m in cfg.metrics.iter().filter(|m| m.is_rate()) {
                let value = counts.rate(m);
                let base = MetricResult::bare(m, Some(t), value);
                let ci = match cfg.ci_method {
                    CiMethod::Bootstrap => {
                        let seed = sub_seed(self.seed, &format!("{scope}|{m}@{t}"));
                        bootstrap_ci(&examples, m, t, cfg.replicates, cfg.level, seed)
                    }
                    CiMethod::BetaPosterior => {
                        let (num, den) = counts.fraction(m).expect("rate metric");
                        beta_posterior_ci(num, den, cfg.level, cfg.prior)
                    }
                };
                results.push(base.with_interval(ci));
            }
        }

        if cfg.metrics.contains(&MetricId::Auc) {
            let seed = sub_seed(self.seed, &format!("{scope}|auc"));
            let ci = bootstrap_ci(
                &examples,
                MetricId::Auc,
                0.0,
                cfg.replicates,
                cfg.level,
                seed,
            );
            results.push(MetricResult::bare(MetricId::Auc, None, auc(&examples)).with_interval(ci));
        }

        if cfg.metrics.contains(&MetricId::PinnedAuc) && !slice.key.is_overall() {
            let mut in_slice = vec![false; self.scored.len()];
            for &i in &slice.member_indices {
                in_slice[i] = true;
            }
            let background: Vec<Scored> = self
                .scored
                .iter()
                .zip(&in_slice)
                .filter(|(_, inside)| !**inside)
                .map(|(s, _)| *s)
                .collect();
            let sample_seed = sub_seed(self.seed, &format!("{scope}|pinned_auc/sample"));
            match pinned_auc(&examples, &background, sample_seed) {
                Ok(p) => {
                    let seed = sub_seed(self.seed, &format!("{scope}|pinned_auc"));
                    let ci = bootstrap_pinned_auc(
                        &examples,
                        &background,
                        p.value,
                        cfg.replicates,
                        cfg.level,
                        seed,
                    );
                    let mut r =
                        MetricResult::bare(MetricId::PinnedAuc, None, p.value).with_interval(ci);
                    r.sample_size = Some(p.sample_size);
                    r.sample_seed = Some(p.seed);
                    results.push(r);
                }
                Err(e) => {
                    let mut r =
                        MetricResult::bare(MetricId::PinnedAuc, None, MetricValue::Undefined);
                    r.note = Some(e.to_string());
                    results.push(r);
                }
            }
        }

        let score_summary = if cfg.metrics.contains(&MetricId::ScoreSummary) {
            let scores: Vec<f64> = examples.iter().map(|e| e.score).collect();
            Some(score_summary(&scores)?.map(round3))
        } else {
            None
        };

        let sweep = match &self.grid {
            Some(grid) => {
                let mut sweep = threshold_sweep(&examples, grid)?;
                for e in &mut sweep.entries {
                    *e = metrics::SweepEntry::new(e.counts(), e.rates().map(|v| v.map(round3)));
                }
                Some(sweep)
            }
            None => None,
        };

        Ok(SliceResult {
            key: slice.key.clone(),
            n: Some(slice.len()),
            suppressed: false,
            metrics: results,
            score_summary,
            sweep,
        })
    }

    fn parity(&self, factors: &[String], slices: &[Slice]) -> Vec<ParityReport> {
        let mut out = Vec::new();
        for &t in &self.config.thresholds {
            let inputs: Vec<ParityInput> = slices
                .iter()
                .map(|s| {
                    let examples: Vec<Scored> =
                        s.member_indices.iter().map(|&i| self.scored[i]).collect();
                    ParityInput {
                        key: s.key.clone(),
                        rates: error_rates(&confusion_at_threshold(&examples, t)),
                        suppressed: s.suppressed,
                    }
                })
                .collect();
            // Fewer than two comparable slices leaves nothing to report.
            if let Ok(mut report) = parity_gaps(factors, t, &inputs) {
                for e in &mut report.slices {
                    e.fpr = round3(e.fpr);
                    e.fnr = round3(e.fnr);
                }
                report.max_gaps.fpr = report.max_gaps.fpr.map(round3);
                report.max_gaps.fnr = report.max_gaps.fnr.map(round3);
                report.max_gaps.fdr = report.max_gaps.fdr.map(round3);
                report.max_gaps.for_ = report.max_gaps.for_.map(round3);
                report.opportunity_gap = round3(report.opportunity_gap);
                report.odds_gap = round3(report.odds_gap);
                out.push(report);
            }
        }
        out
    }
}

/// Computes metrics, intervals, sweeps and parity gaps for every slice the
/// configuration asks for. Deterministic given the set and the configuration.
pub fn assemble_quantitative(
    set: &EvaluationSet,
    config: &AnalysisConfig,
    version_label: &str,
) -> Result<QuantitativeAnalyses, ReportError> {
    if !set.is_fully_scored() {
        return Err(ReportError::Unscored(set.name().to_string()));
    }
    check_config(config)?;
    let scored = Scored::collect(set.records())?;
    let grid = config.sweep_step.map(metrics::default_grid).transpose()?;
    let ctx = Context {
        config,
        scored,
        grid,
        seed: config.seed.unwrap_or_default(),
    };

    let overall = ctx.slice_result(&slicer::overall_slice(set, config.min_cell))?;
    let mut unitary = Vec::new();
    let mut parity = Vec::new();
    for factor in &config.factors {
        let factors = vec![factor.clone()];
        let slices = slicer::unitary_slices(set, &factors, config.min_cell)?;
        parity.extend(ctx.parity(&factors, &slices));
        unitary.push(FactorBreakdown {
            excluded: slicer::excluded_count(set, &factors),
            slices: slices
                .iter()
                .map(|s| ctx.slice_result(s))
                .collect::<Result<_, _>>()?,
            factors,
        });
    }
    let mut intersectional = Vec::new();
    for tuple in &config.intersections {
        let slices = slicer::intersectional_slices(set, tuple, config.min_cell)?;
        parity.extend(ctx.parity(tuple, &slices));
        intersectional.push(FactorBreakdown {
            factors: tuple.clone(),
            excluded: slicer::excluded_count(set, tuple),
            slices: slices
                .iter()
                .map(|s| ctx.slice_result(s))
                .collect::<Result<_, _>>()?,
        });
    }

    Ok(QuantitativeAnalyses {
        version_label: version_label.to_string(),
        config: config.clone(),
        overall,
        unitary,
        intersectional,
        parity,
    })
}

/// Adds or replaces the block with the same version label, keeping the
/// position of a replaced block.
pub fn upsert_analyses(card: &mut ModelCard, block: QuantitativeAnalyses) {
    let blocks = card.quantitative_analyses.get_or_insert_with(Vec::new);
    match blocks
        .iter_mut()
        .find(|b| b.version_label == block.version_label)
    {
        Some(existing) => *existing = block,
        None => blocks.push(block),
    }
}

fn require_complete(card: &ModelCard) -> Result<(), ReportError> {
    let report = validate_card(card);
    if report.is_complete() {
        Ok(())
    } else {
        Err(ReportError::Incomplete(report))
    }
}

/// Canonical JSON of a card that validates.
pub fn render_json(card: &ModelCard) -> Result<Vec<u8>, ReportError> {
    require_complete(card)?;
    Ok(save_card(card))
}
