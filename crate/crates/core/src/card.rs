//! The model card document: nine sections, canonical JSON form, and
//! completeness validation.
//!
//! Validation is tiered. Errors mark a card incomplete (a required section or
//! prompt is missing or inconsistent); warnings are advisory and never change
//! the status.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::metrics::MetricId;
use crate::report::QuantitativeAnalyses;
use crate::uncertainty::{CiMethod, DEFAULT_LEVEL, DEFAULT_PRIOR, DEFAULT_REPLICATES};

pub const CARD_FORMAT_VERSION: &str = "1.0";

/// Top-level keys in canonical order.
pub const TOP_LEVEL_KEYS: [&str; 11] = [
    "card_format_version",
    "title",
    "model_details",
    "intended_use",
    "factors",
    "metrics_spec",
    "evaluation_data",
    "training_data",
    "quantitative_analyses",
    "ethical_considerations",
    "caveats_recommendations",
];

/// The nine section keys, in document order.
pub const SECTION_KEYS: [&str; 9] = [
    "model_details",
    "intended_use",
    "factors",
    "metrics_spec",
    "evaluation_data",
    "training_data",
    "quantitative_analyses",
    "ethical_considerations",
    "caveats_recommendations",
];

/// Display titles of the nine sections, in document order.
pub const SECTION_TITLES: [&str; 9] = [
    "Model Details",
    "Intended Use",
    "Factors",
    "Metrics",
    "Evaluation Data",
    "Training Data",
    "Quantitative Analyses",
    "Ethical Considerations",
    "Caveats and Recommendations",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCard {
    pub card_format_version: String,
    #[serde(default)]
    pub title: String,
    pub model_details: ModelDetails,
    pub intended_use: IntendedUse,
    pub factors: FactorsSection,
    pub metrics_spec: MetricsSpec,
    pub evaluation_data: Vec<DatasetDoc>,
    pub training_data: TrainingDataDoc,
    /// One block per model version; `None` until computed.
    pub quantitative_analyses: Option<Vec<QuantitativeAnalyses>>,
    pub ethical_considerations: EthicalConsiderations,
    pub caveats_recommendations: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDetails {
    pub developer: String,
    /// ISO-8601 calendar date, `YYYY`, `YYYY-MM` or `YYYY-MM-DD`.
    pub model_date: String,
    pub version: String,
    pub model_type: String,
    pub training_info: String,
    pub resources: Vec<String>,
    pub citation: String,
    pub license: String,
    pub contact: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntendedUse {
    pub primary_uses: Vec<String>,
    pub primary_users: Vec<String>,
    pub out_of_scope_uses: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorNote {
    pub name: String,
    pub rationale: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorsSection {
    pub relevant_factors: Vec<FactorNote>,
    pub evaluation_factors: Vec<FactorNote>,
}

impl FactorsSection {
    pub fn evaluation_names(&self) -> Vec<String> {
        self.evaluation_factors
            .iter()
            .map(|f| f.name.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureNote {
    pub metric: MetricId,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationApproach {
    pub method: CiMethod,
    pub replicates: usize,
    pub level: f64,
    pub seed: Option<u64>,
    /// Symmetric Beta prior for the posterior method.
    pub prior: f64,
}

impl Default for VariationApproach {
    fn default() -> Self {
        Self {
            method: CiMethod::Bootstrap,
            replicates: DEFAULT_REPLICATES,
            level: DEFAULT_LEVEL,
            seed: None,
            prior: DEFAULT_PRIOR,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    pub performance_measures: Vec<MeasureNote>,
    pub decision_thresholds: Vec<f64>,
    pub variation_approach: VariationApproach,
}

impl MetricsSpec {
    pub fn metric_ids(&self) -> Vec<MetricId> {
        self.performance_measures.iter().map(|m| m.metric).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDoc {
    pub name: String,
    pub motivation: String,
    pub preprocessing: String,
    #[serde(default)]
    pub provenance_link: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetailLevel {
    #[default]
    Full,
    DistributionOnly,
    Unavailable,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingDataDoc {
    pub detail_level: DetailLevel,
    pub body: String,
    /// factor -> value -> proportion of the training data.
    #[serde(default)]
    pub group_distributions: Option<BTreeMap<String, BTreeMap<String, f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EthicalConsiderations {
    pub sensitive_data: String,
    pub human_life: String,
    pub mitigations: String,
    pub risks_and_harms: String,
    pub fraught_use_cases: String,
}

impl EthicalConsiderations {
    fn is_empty(&self) -> bool {
        [
            &self.sensitive_data,
            &self.human_life,
            &self.mitigations,
            &self.risks_and_harms,
            &self.fraught_use_cases,
        ]
        .iter()
        .all(|s| blank(s))
    }
}

fn blank(s: &str) -> bool {
    s.trim().is_empty()
}

#[derive(Debug, Error)]
pub enum CardError {
    #[error("card is not valid JSON: {0}")]
    Syntax(String),
    #[error("card must be a JSON object")]
    NotObject,
    #[error("unknown top-level key `{0}`")]
    UnknownKey(String),
    #[error("at `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("unsupported card_format_version `{0}` (expected {CARD_FORMAT_VERSION})")]
    Version(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Unknown top-level keys are errors.
    #[default]
    Strict,
    /// Unknown top-level keys are dropped with a warning.
    Lax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub fn load_card(bytes: &[u8]) -> Result<ModelCard, CardError> {
    load_card_with(bytes, LoadMode::Strict).map(|(card, _)| card)
}

/// Loads a card; in lax mode also returns the warnings for dropped keys.
pub fn load_card_with(bytes: &[u8], mode: LoadMode) -> Result<(ModelCard, Vec<Issue>), CardError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| CardError::Syntax(e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(CardError::NotObject);
    };
    let mut warnings = Vec::new();
    let unknown: Vec<String> = map
        .keys()
        .filter(|k| !TOP_LEVEL_KEYS.contains(&k.as_str()))
        .cloned()
        .collect();
    for key in unknown {
        match mode {
            LoadMode::Strict => return Err(CardError::UnknownKey(key)),
            LoadMode::Lax => {
                map.remove(&key);
                warnings.push(Issue::new(key, "unknown top-level key ignored"));
            }
        }
    }
    if let Some(v) = map.get("card_format_version") {
        match v.as_str() {
            Some(CARD_FORMAT_VERSION) => {}
            Some(other) => return Err(CardError::Version(other.to_string())),
            None => return Err(CardError::Version(v.to_string())),
        }
    }
    let card = serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| {
        let path = e.path().to_string();
        CardError::Field {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    Ok((card, warnings))
}

/// Canonical bytes: pretty-printed JSON, keys in declaration order, trailing
/// newline.
pub fn save_card(card: &ModelCard) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(card).expect("model card serialises");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub status: Status,
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_complete(&self) -> bool {
        self.status == Status::Complete
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            Status::Complete => "complete",
            Status::Incomplete => "incomplete",
        };
        writeln!(
            f,
            "status: {status} ({} error(s), {} warning(s))",
            self.errors.len(),
            self.warnings.len()
        )?;
        for e in &self.errors {
            writeln!(f, "error   {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning {w}")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Findings {
    errors: Vec<Issue>,
    warnings: Vec<Issue>,
}

impl Findings {
    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue::new(path, message));
    }

    fn warn(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue::new(path, message));
    }
}

const EMPTY_SECTION: &str = "section is empty";

/// Accepts `YYYY`, `YYYY-MM` and `YYYY-MM-DD`.
pub fn is_iso_date(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    let digits = |p: &str, n: usize| p.len() == n && p.bytes().all(|b| b.is_ascii_digit());
    match parts.as_slice() {
        [y] => digits(y, 4),
        [y, m] => digits(y, 4) && digits(m, 2) && (1..=12).contains(&m.parse::<u32>().unwrap_or(0)),
        [y, m, d] => {
            digits(y, 4)
                && digits(m, 2)
                && digits(d, 2)
                && chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
        }
        _ => false,
    }
}

pub fn validate_card(card: &ModelCard) -> ValidationReport {
    let mut f = Findings::default();
    if card.card_format_version != CARD_FORMAT_VERSION {
        f.error(
            "card_format_version",
            format!("expected {CARD_FORMAT_VERSION}"),
        );
    }
    if blank(&card.title) {
        f.warn("title", "card has no title");
    }
    check_model_details(&card.model_details, &mut f);
    check_intended_use(&card.intended_use, &mut f);
    check_factors(&card.factors, &mut f);
    check_metrics_spec(&card.metrics_spec, &mut f);
    check_evaluation_data(&card.evaluation_data, &mut f);
    check_training_data(&card.training_data, &mut f);
    check_analyses(card, &mut f);
    if card.ethical_considerations.is_empty() {
        f.warn("ethical_considerations", EMPTY_SECTION);
    }
    if card.caveats_recommendations.iter().all(|c| blank(c)) {
        f.warn("caveats_recommendations", EMPTY_SECTION);
    }
    ValidationReport {
        status: if f.errors.is_empty() {
            Status::Complete
        } else {
            Status::Incomplete
        },
        errors: f.errors,
        warnings: f.warnings,
    }
}

fn check_model_details(d: &ModelDetails, f: &mut Findings) {
    let texts = [
        &d.developer,
        &d.model_date,
        &d.version,
        &d.model_type,
        &d.training_info,
        &d.citation,
        &d.license,
        &d.contact,
    ];
    if texts.iter().all(|s| blank(s)) && d.resources.is_empty() {
        f.error("model_details", EMPTY_SECTION);
        return;
    }
    for (field, value) in [
        ("developer", &d.developer),
        ("version", &d.version),
        ("model_type", &d.model_type),
    ] {
        if blank(value) {
            f.error(format!("model_details.{field}"), "required");
        }
    }
    if !is_iso_date(d.model_date.trim()) {
        f.error(
            "model_details.model_date",
            format!("`{}` is not an ISO-8601 date", d.model_date),
        );
    }
    for (field, value) in [
        ("training_info", &d.training_info),
        ("citation", &d.citation),
        ("license", &d.license),
        ("contact", &d.contact),
    ] {
        if blank(value) {
            f.warn(format!("model_details.{field}"), "not provided");
        }
    }
    if d.resources.is_empty() {
        f.warn("model_details.resources", "not provided");
    }
}

fn check_intended_use(u: &IntendedUse, f: &mut Findings) {
    let lists = [
        ("primary_uses", &u.primary_uses),
        ("primary_users", &u.primary_users),
        ("out_of_scope_uses", &u.out_of_scope_uses),
    ];
    if lists.iter().all(|(_, l)| l.iter().all(|s| blank(s))) {
        f.error("intended_use", EMPTY_SECTION);
        return;
    }
    for (field, list) in lists {
        if list.iter().all(|s| blank(s)) {
            f.error(
                format!("intended_use.{field}"),
                "at least one entry required",
            );
        }
    }
}

fn check_factors(s: &FactorsSection, f: &mut Findings) {
    if s.relevant_factors.is_empty() && s.evaluation_factors.is_empty() {
        f.error("factors", EMPTY_SECTION);
        return;
    }
    if s.evaluation_factors.is_empty() {
        f.error(
            "factors.evaluation_factors",
            "at least one evaluation factor required",
        );
    }
    if s.relevant_factors.is_empty() {
        f.warn("factors.relevant_factors", "not provided");
    }
    let mut seen = HashSet::new();
    for (i, note) in s.evaluation_factors.iter().enumerate() {
        if blank(&note.name) {
            f.error(format!("factors.evaluation_factors[{i}].name"), "required");
        } else if !seen.insert(note.name.as_str()) {
            f.error(
                format!("factors.evaluation_factors[{i}].name"),
                format!("`{}` listed twice", note.name),
            );
        }
    }
    for (i, note) in s.relevant_factors.iter().enumerate() {
        if blank(&note.name) {
            f.error(format!("factors.relevant_factors[{i}].name"), "required");
        }
    }
}

fn check_metrics_spec(m: &MetricsSpec, f: &mut Findings) {
    if m.performance_measures.is_empty() && m.decision_thresholds.is_empty() {
        f.error("metrics_spec", EMPTY_SECTION);
        return;
    }
    if m.performance_measures.is_empty() {
        f.error(
            "metrics_spec.performance_measures",
            "at least one measure required",
        );
    }
    let mut seen = HashSet::new();
    for (i, note) in m.performance_measures.iter().enumerate() {
        if !seen.insert(note.metric) {
            f.error(
                format!("metrics_spec.performance_measures[{i}]"),
                format!("`{}` listed twice", note.metric),
            );
        }
        if blank(&note.rationale) {
            f.warn(
                format!("metrics_spec.performance_measures[{i}].rationale"),
                "not provided",
            );
        }
    }
    let t = &m.decision_thresholds;
    if t.iter().any(|x| !(0.0..=1.0).contains(x)) {
        f.error(
            "metrics_spec.decision_thresholds",
            "thresholds must lie in [0, 1]",
        );
    }
    if t.windows(2).any(|w| w[0] >= w[1]) {
        f.error(
            "metrics_spec.decision_thresholds",
            "thresholds must be strictly ascending",
        );
    }
    if t.is_empty() && m.performance_measures.iter().any(|n| n.metric.is_rate()) {
        f.error(
            "metrics_spec.decision_thresholds",
            "rate metrics need at least one decision threshold",
        );
    }
    let v = &m.variation_approach;
    if v.replicates == 0 {
        f.error(
            "metrics_spec.variation_approach.replicates",
            "must be at least 1",
        );
    }
    if !(v.level > 0.0 && v.level < 1.0) {
        f.error(
            "metrics_spec.variation_approach.level",
            "must lie in (0, 1)",
        );
    }
    if !(v.prior > 0.0 && v.prior.is_finite()) {
        f.error("metrics_spec.variation_approach.prior", "must be positive");
    }
    if v.seed.is_none() && v.method == CiMethod::Bootstrap {
        f.warn(
            "metrics_spec.variation_approach.seed",
            "no seed recorded; intervals are not reproducible",
        );
    }
}

fn check_evaluation_data(docs: &[DatasetDoc], f: &mut Findings) {
    let doc_blank =
        |d: &DatasetDoc| blank(&d.name) && blank(&d.motivation) && blank(&d.preprocessing);
    if docs.iter().all(doc_blank) {
        f.error("evaluation_data", EMPTY_SECTION);
        return;
    }
    for (i, d) in docs.iter().enumerate() {
        if blank(&d.name) {
            f.error(format!("evaluation_data[{i}].name"), "required");
        }
        if blank(&d.motivation) {
            f.warn(format!("evaluation_data[{i}].motivation"), "not provided");
        }
        if blank(&d.preprocessing) {
            f.warn(
                format!("evaluation_data[{i}].preprocessing"),
                "not provided",
            );
        }
    }
}

fn check_training_data(t: &TrainingDataDoc, f: &mut Findings) {
    let has_distributions = t
        .group_distributions
        .as_ref()
        .is_some_and(|g| !g.is_empty());
    if t.detail_level == DetailLevel::Unavailable {
        f.warn(
            "training_data.detail_level",
            "training data unavailable; consider at least group distributions",
        );
    } else if blank(&t.body) && !has_distributions {
        f.error("training_data", EMPTY_SECTION);
    }
    if t.detail_level == DetailLevel::DistributionOnly && !has_distributions {
        f.error(
            "training_data.group_distributions",
            "required when detail_level is distribution_only",
        );
    }
    for (factor, dist) in t.group_distributions.iter().flatten() {
        let path = format!("training_data.group_distributions.{factor}");
        if dist.values().any(|p| !(0.0..=1.0).contains(p)) {
            f.error(&path, "proportions must lie in [0, 1]");
        }
        let total: f64 = dist.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            f.error(path, format!("proportions sum to {total}, expected 1"));
        }
    }
}

fn check_analyses(card: &ModelCard, f: &mut Findings) {
    let blocks = match &card.quantitative_analyses {
        Some(b) if !b.is_empty() => b,
        _ => {
            f.warn("quantitative_analyses", "not yet computed");
            return;
        }
    };
    let mut labels = HashSet::new();
    for (i, qa) in blocks.iter().enumerate() {
        let path = format!("quantitative_analyses[{i}]");
        if blank(&qa.version_label) {
            f.error(format!("{path}.version_label"), "required");
        } else if !labels.insert(qa.version_label.as_str()) {
            f.error(
                format!("{path}.version_label"),
                format!("`{}` used by two blocks", qa.version_label),
            );
        }
        for note in &card.factors.evaluation_factors {
            if !qa
                .unitary
                .iter()
                .any(|b| b.factors.len() == 1 && b.factors[0] == note.name)
            {
                f.warn(
                    format!("{path}.unitary"),
                    format!(
                        "evaluation factor `{}` has no quantitative results",
                        note.name
                    ),
                );
            }
        }
        if !card.metrics_spec.decision_thresholds.is_empty()
            && !qa.all_slices().any(|s| s.sweep.is_some())
        {
            f.warn(
                path.to_string(),
                "decision thresholds declared but no threshold sweep present",
            );
        }
        let min_cell = qa.config.min_cell;
        for s in qa.all_slices() {
            let key = s.key.to_string();
            if s.suppressed {
                if s.n.is_some()
                    || !s.metrics.is_empty()
                    || s.sweep.is_some()
                    || s.score_summary.is_some()
                {
                    f.error(
                        format!("{path}[{key}]"),
                        "suppressed slice discloses values",
                    );
                }
            } else if s.n.is_none_or(|n| n < min_cell) {
                f.error(
                    format!("{path}[{key}]"),
                    format!("slice below minimum cell size {min_cell} is not suppressed"),
                );
            }
        }
    }
}

/// A card with every section present and every prompt blank, ready to be
/// filled in.
pub fn scaffold() -> ModelCard {
    ModelCard {
        card_format_version: CARD_FORMAT_VERSION.to_string(),
        title: String::new(),
        model_details: ModelDetails::default(),
        intended_use: IntendedUse::default(),
        factors: FactorsSection::default(),
        metrics_spec: MetricsSpec::default(),
        evaluation_data: vec![DatasetDoc::default()],
        training_data: TrainingDataDoc::default(),
        quantitative_analyses: None,
        ethical_considerations: EthicalConsiderations::default(),
        caveats_recommendations: Vec::new(),
    }
}

/// Errors a fresh scaffold reports: one per empty required section.
pub const SCAFFOLD_ERROR_PATHS: [&str; 6] = [
    "model_details",
    "intended_use",
    "factors",
    "metrics_spec",
    "evaluation_data",
    "training_data",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ModelCard {
        let mut c = scaffold();
        c.title = "Demo".into();
        c.model_details = ModelDetails {
            developer: "Team".into(),
            model_date: "2019-01-29".into(),
            version: "1".into(),
            model_type: "Logistic regression".into(),
            training_info: "SGD".into(),
            resources: vec!["https://example.org".into()],
            citation: "n/a".into(),
            license: "Apache-2.0".into(),
            contact: "team@example.org".into(),
        };
        c.intended_use = IntendedUse {
            primary_uses: vec!["demo".into()],
            primary_users: vec!["developers".into()],
            out_of_scope_uses: vec!["production".into()],
        };
        c.factors.evaluation_factors = vec![FactorNote {
            name: "gender".into(),
            rationale: "r".into(),
        }];
        c.factors.relevant_factors = c.factors.evaluation_factors.clone();
        c.metrics_spec.performance_measures = vec![MeasureNote {
            metric: MetricId::Fpr,
            rationale: "r".into(),
        }];
        c.metrics_spec.decision_thresholds = vec![0.5];
        c.metrics_spec.variation_approach.seed = Some(1);
        c.evaluation_data = vec![DatasetDoc {
            name: "test split".into(),
            motivation: "m".into(),
            preprocessing: "p".into(),
            provenance_link: None,
        }];
        c.training_data.body = "train split".into();
        c.ethical_considerations.sensitive_data = "none".into();
        c.caveats_recommendations = vec!["none".into()];
        c
    }

    #[test]
    fn scaffold_reports_one_error_per_empty_section() {
        let report = validate_card(&scaffold());
        assert_eq!(report.status, Status::Incomplete);
        let paths: Vec<&str> = report.errors.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, SCAFFOLD_ERROR_PATHS);
    }

    #[test]
    fn empty_intended_use_is_an_error() {
        let mut c = minimal();
        c.intended_use = IntendedUse::default();
        let r = validate_card(&c);
        assert_eq!(r.status, Status::Incomplete);
        assert_eq!(r.errors, vec![Issue::new("intended_use", EMPTY_SECTION)]);
    }

    #[test]
    fn minimal_card_is_complete_with_pending_analyses() {
        let r = validate_card(&minimal());
        assert!(r.is_complete(), "{r}");
        assert!(r.warnings.iter().any(|w| w.path == "quantitative_analyses"));
    }

    #[test]
    fn empty_ethics_and_caveats_only_warn() {
        let mut c = minimal();
        c.ethical_considerations = EthicalConsiderations::default();
        c.caveats_recommendations.clear();
        let r = validate_card(&c);
        assert!(r.is_complete());
        assert!(r
            .warnings
            .iter()
            .any(|w| w.path == "ethical_considerations"));
        assert!(r
            .warnings
            .iter()
            .any(|w| w.path == "caveats_recommendations"));
    }

    #[test]
    fn unavailable_training_data_warns() {
        let mut c = minimal();
        c.training_data = TrainingDataDoc {
            detail_level: DetailLevel::Unavailable,
            body: String::new(),
            group_distributions: None,
        };
        let r = validate_card(&c);
        assert!(r.is_complete());
        assert!(r
            .warnings
            .iter()
            .any(|w| w.path == "training_data.detail_level"));
    }

    #[test]
    fn distributions_must_sum_to_one() {
        let mut c = minimal();
        c.training_data.group_distributions = Some(BTreeMap::from([(
            "gender".to_string(),
            BTreeMap::from([("male".to_string(), 0.5), ("female".to_string(), 0.4)]),
        )]));
        let r = validate_card(&c);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].path, "training_data.group_distributions.gender");
        c.training_data
            .group_distributions
            .as_mut()
            .unwrap()
            .get_mut("gender")
            .unwrap()
            .insert("female".into(), 0.5);
        assert!(validate_card(&c).is_complete());
    }

    #[test]
    fn thresholds_and_dates_checked() {
        let mut c = minimal();
        c.metrics_spec.decision_thresholds = vec![0.7, 0.3];
        c.model_details.model_date = "29/01/2019".into();
        let paths: Vec<String> = validate_card(&c)
            .errors
            .into_iter()
            .map(|e| e.path)
            .collect();
        assert!(paths.contains(&"metrics_spec.decision_thresholds".to_string()));
        assert!(paths.contains(&"model_details.model_date".to_string()));
        assert!(is_iso_date("2018") && is_iso_date("2018-02") && is_iso_date("2020-02-29"));
        assert!(!is_iso_date("2019-02-29") && !is_iso_date("2018-13") && !is_iso_date(""));
    }

    #[test]
    fn save_load_round_trip_is_byte_stable() {
        let card = minimal();
        let bytes = save_card(&card);
        let back = load_card(&bytes).unwrap();
        assert_eq!(back, card);
        assert_eq!(save_card(&back), bytes);
    }

    #[test]
    fn keys_follow_canonical_order() {
        let v: Value = serde_json::from_slice(&save_card(&scaffold())).unwrap();
        let text = String::from_utf8(save_card(&scaffold())).unwrap();
        let mut last = 0;
        for key in TOP_LEVEL_KEYS {
            assert!(v.get(key).is_some(), "{key}");
            let pos = text.find(&format!("\"{key}\"")).unwrap();
            assert!(pos >= last);
            last = pos;
        }
    }

    #[test]
    fn missing_section_is_a_parse_error_naming_it() {
        let mut v: Value = serde_json::from_slice(&save_card(&minimal())).unwrap();
        v.as_object_mut().unwrap().remove("model_details");
        let err = load_card(v.to_string().as_bytes()).unwrap_err();
        assert!(err.to_string().contains("model_details"), "{err}");
    }

    #[test]
    fn nested_errors_carry_paths() {
        let mut v: Value = serde_json::from_slice(&save_card(&minimal())).unwrap();
        v["metrics_spec"]["performance_measures"][0]["metric"] = Value::String("accuracy".into());
        match load_card(v.to_string().as_bytes()).unwrap_err() {
            CardError::Field { path, .. } => {
                assert_eq!(path, "metrics_spec.performance_measures[0].metric")
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_top_level_key_strict_vs_lax() {
        let mut v: Value = serde_json::from_slice(&save_card(&minimal())).unwrap();
        v["sidebar"] = Value::Bool(true);
        let bytes = v.to_string();
        assert!(
            matches!(load_card(bytes.as_bytes()), Err(CardError::UnknownKey(k)) if k == "sidebar")
        );
        let (card, warnings) = load_card_with(bytes.as_bytes(), LoadMode::Lax).unwrap();
        assert_eq!(card, minimal());
        assert_eq!(warnings[0].path, "sidebar");
    }

    #[test]
    fn wrong_format_version_rejected() {
        let mut v: Value = serde_json::from_slice(&save_card(&minimal())).unwrap();
        v["card_format_version"] = Value::String("2.0".into());
        assert!(matches!(
            load_card(v.to_string().as_bytes()),
            Err(CardError::Version(_))
        ));
    }

    #[test]
    fn validation_is_pure() {
        let c = minimal();
        assert_eq!(validate_card(&c), validate_card(&c));
    }
}
