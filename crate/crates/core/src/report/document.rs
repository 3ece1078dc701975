//! Format-neutral layout of a card. Markdown and HTML both render from these
//! blocks, so the two always show the same text and numbers.

use crate::card::{DetailLevel, ModelCard, SECTION_TITLES};
use crate::metrics::{MetricId, MetricValue};
use crate::report::{FactorBreakdown, MetricResult, QuantitativeAnalyses, SliceResult};
use crate::slicer::SliceKey;
use crate::uncertainty::CiMethod;

pub(crate) const UNDEFINED_MARK: &str = "\u{2014}";
const NOT_PROVIDED: &str = "Not provided.";

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Block {
    Title(String),
    Section(&'static str),
    Heading(u8, String),
    Fields(Vec<(String, String)>),
    List(Vec<String>),
    Para(String),
    Notice(String),
    Table {
        headers: Vec<String>,
        rows: Vec<Vec<String>>,
    },
}

fn text_or_placeholder(s: &str) -> String {
    if s.trim().is_empty() {
        NOT_PROVIDED.to_string()
    } else {
        s.to_string()
    }
}

fn list_or_placeholder(out: &mut Vec<Block>, items: &[String]) {
    if items.iter().all(|s| s.trim().is_empty()) {
        out.push(Block::Para(NOT_PROVIDED.to_string()));
    } else {
        out.push(Block::List(items.to_vec()));
    }
}

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

pub(crate) fn fmt_value(v: MetricValue) -> String {
    match v {
        MetricValue::Defined(x) => fmt3(x),
        MetricValue::Undefined => UNDEFINED_MARK.to_string(),
    }
}

pub(crate) fn fmt_result(r: &MetricResult) -> String {
    match (r.value, r.interval()) {
        (MetricValue::Defined(v), Some((lo, hi))) => {
            format!("{} [{}, {}]", fmt3(v), fmt3(lo), fmt3(hi))
        }
        (v, _) => fmt_value(v),
    }
}

/// Column for one metric, at one threshold for rates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Column {
    metric: MetricId,
    threshold: Option<f64>,
}

impl Column {
    fn header(&self) -> String {
        match self.threshold {
            Some(t) => format!("{} @ {t}", self.metric.display_name()),
            None => self.metric.display_name().to_string(),
        }
    }
}

fn columns(qa: &QuantitativeAnalyses) -> Vec<Column> {
    let cfg = &qa.config;
    let mut cols = Vec::new();
    for &t in &cfg.thresholds {
        for &m in cfg.metrics.iter().filter(|m| m.is_rate()) {
            cols.push(Column {
                metric: m,
                threshold: Some(t),
            });
        }
    }
    for m in [MetricId::Auc, MetricId::PinnedAuc] {
        if cfg.metrics.contains(&m) {
            cols.push(Column {
                metric: m,
                threshold: None,
            });
        }
    }
    cols
}

fn suppressed_label(min_cell: usize) -> String {
    format!("suppressed (n < {min_cell})")
}

fn slice_row(s: &SliceResult, cols: &[Column], min_cell: usize) -> Vec<String> {
    let mut row = vec![s.key.to_string()];
    if s.suppressed {
        row.push(suppressed_label(min_cell));
        row.extend(cols.iter().map(|_| String::new()));
        return row;
    }
    row.push(s.n.map(|n| n.to_string()).unwrap_or_default());
    for c in cols {
        row.push(
            s.metric(c.metric, c.threshold)
                .map(fmt_result)
                .unwrap_or_default(),
        );
    }
    row
}

fn results_table<'a>(
    slices: impl IntoIterator<Item = &'a SliceResult>,
    cols: &[Column],
    min_cell: usize,
) -> Block {
    let mut headers = vec!["Slice".to_string(), "n".to_string()];
    headers.extend(cols.iter().map(Column::header));
    Block::Table {
        headers,
        rows: slices
            .into_iter()
            .map(|s| slice_row(s, cols, min_cell))
            .collect(),
    }
}

fn breakdown_blocks(out: &mut Vec<Block>, b: &FactorBreakdown, cols: &[Column], min_cell: usize) {
    out.push(Block::Heading(
        4,
        format!("By {}", b.factors.join(" \u{00d7} ")),
    ));
    out.push(results_table(&b.slices, cols, min_cell));
    if b.excluded > 0 {
        out.push(Block::Para(format!(
            "{} record(s) with an unknown value are not in any slice of this breakdown.",
            b.excluded
        )));
    }
}

fn method_text(qa: &QuantitativeAnalyses) -> String {
    let cfg = &qa.config;
    let level = cfg.level;
    let rate_method = match cfg.ci_method {
        CiMethod::Bootstrap => format!("percentile bootstrap with {} replicates", cfg.replicates),
        CiMethod::BetaPosterior => format!("Beta posterior with prior {}", cfg.prior),
    };
    let mut text = format!(
        "Dataset: {}. Intervals at level {level}: rates by {rate_method}",
        cfg.dataset
    );
    if cfg
        .metrics
        .iter()
        .any(|m| matches!(m, MetricId::Auc | MetricId::PinnedAuc))
    {
        text.push_str(&format!(
            "; AUC by percentile bootstrap with {} replicates",
            cfg.replicates
        ));
    }
    text.push('.');
    if let Some(seed) = cfg.seed {
        text.push_str(&format!(" Seed {seed}."));
    }
    text.push_str(&format!(
        " Slices with fewer than {} records are suppressed.",
        cfg.min_cell
    ));
    text
}

fn analyses_blocks(out: &mut Vec<Block>, qa: &QuantitativeAnalyses) {
    let cols = columns(qa);
    let min_cell = qa.config.min_cell;
    out.push(Block::Heading(3, format!("Version {}", qa.version_label)));
    out.push(Block::Para(method_text(qa)));

    out.push(Block::Heading(4, "Overall".to_string()));
    out.push(results_table([&qa.overall], &cols, min_cell));
    for b in &qa.unitary {
        breakdown_blocks(out, b, &cols, min_cell);
    }
    for b in &qa.intersectional {
        breakdown_blocks(out, b, &cols, min_cell);
    }

    let summaries: Vec<&SliceResult> = qa
        .all_slices()
        .filter(|s| s.score_summary.is_some())
        .collect();
    if !summaries.is_empty() {
        out.push(Block::Heading(4, "Score distributions".to_string()));
        let headers = [
            "Slice",
            "mean",
            "median",
            "mode",
            "q1",
            "q3",
            "range",
            "mean abs. dev.",
            "std. dev.",
        ];
        let rows = summaries
            .iter()
            .map(|s| {
                let m = s.score_summary.expect("filtered");
                let mut row = vec![s.key.to_string()];
                row.extend(
                    [
                        m.mean,
                        m.median,
                        m.mode,
                        m.q1,
                        m.q3,
                        m.range,
                        m.mean_absolute_deviation,
                        m.std_dev,
                    ]
                    .into_iter()
                    .map(fmt3),
                );
                row
            })
            .collect();
        out.push(Block::Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows,
        });
    }

    if !qa.parity.is_empty() {
        out.push(Block::Heading(4, "Parity gaps".to_string()));
        let headers = [
            "Factors",
            "Threshold",
            "Opportunity gap (FNR)",
            "Odds gap (FNR, FPR)",
            "Max FDR gap",
            "Max FOR gap",
        ];
        let rows = qa
            .parity
            .iter()
            .map(|p| {
                vec![
                    p.factors.join(" \u{00d7} "),
                    p.threshold.to_string(),
                    fmt3(p.opportunity_gap),
                    fmt3(p.odds_gap),
                    fmt_value(p.max_gaps.fdr),
                    fmt_value(p.max_gaps.for_),
                ]
            })
            .collect();
        out.push(Block::Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows,
        });
    }
}

/// One table per metric column with a row per slice and a column per
/// version, for cards that carry several model versions.
fn comparison_blocks(out: &mut Vec<Block>, blocks: &[QuantitativeAnalyses]) {
    out.push(Block::Heading(3, "Version comparison".to_string()));
    let mut keys: Vec<&SliceKey> = Vec::new();
    for qa in blocks {
        for s in qa.all_slices() {
            if !keys.contains(&&s.key) {
                keys.push(&s.key);
            }
        }
    }
    let mut cols: Vec<Column> = Vec::new();
    for qa in blocks {
        for c in columns(qa) {
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
    }
    for c in cols {
        out.push(Block::Heading(4, c.header()));
        let mut headers = vec!["Slice".to_string()];
        headers.extend(blocks.iter().map(|qa| qa.version_label.clone()));
        let rows = keys
            .iter()
            .map(|key| {
                let mut row = vec![key.to_string()];
                row.extend(blocks.iter().map(|qa| {
                    match qa.find_slice(key) {
                        Some(s) if s.suppressed => suppressed_label(qa.config.min_cell),
                        Some(s) => s
                            .metric(c.metric, c.threshold)
                            .map(fmt_result)
                            .unwrap_or_default(),
                        None => String::new(),
                    }
                }));
                row
            })
            .collect();
        out.push(Block::Table { headers, rows });
    }
}

pub(crate) fn build(card: &ModelCard) -> Vec<Block> {
    let mut out = Vec::new();
    let title = if card.title.trim().is_empty() {
        "Model Card".to_string()
    } else {
        format!("Model Card: {}", card.title)
    };
    out.push(Block::Title(title));

    let d = &card.model_details;
    out.push(Block::Section(SECTION_TITLES[0]));
    let resources = if d.resources.is_empty() {
        NOT_PROVIDED.to_string()
    } else {
        d.resources.join("; ")
    };
    out.push(Block::Fields(vec![
        ("Developer".into(), text_or_placeholder(&d.developer)),
        ("Date".into(), text_or_placeholder(&d.model_date)),
        ("Version".into(), text_or_placeholder(&d.version)),
        ("Type".into(), text_or_placeholder(&d.model_type)),
        (
            "Training details".into(),
            text_or_placeholder(&d.training_info),
        ),
        ("Resources".into(), resources),
        ("Citation".into(), text_or_placeholder(&d.citation)),
        ("License".into(), text_or_placeholder(&d.license)),
        ("Contact".into(), text_or_placeholder(&d.contact)),
    ]));

    let u = &card.intended_use;
    out.push(Block::Section(SECTION_TITLES[1]));
    for (heading, items) in [
        ("Primary uses", &u.primary_uses),
        ("Primary users", &u.primary_users),
        ("Out-of-scope uses", &u.out_of_scope_uses),
    ] {
        out.push(Block::Heading(3, heading.to_string()));
        list_or_placeholder(&mut out, items);
    }

    out.push(Block::Section(SECTION_TITLES[2]));
    for (heading, notes) in [
        ("Relevant factors", &card.factors.relevant_factors),
        ("Evaluation factors", &card.factors.evaluation_factors),
    ] {
        out.push(Block::Heading(3, heading.to_string()));
        if notes.is_empty() {
            out.push(Block::Para(NOT_PROVIDED.to_string()));
        } else {
            out.push(Block::Fields(
                notes
                    .iter()
                    .map(|n| (n.name.clone(), text_or_placeholder(&n.rationale)))
                    .collect(),
            ));
        }
    }

    let m = &card.metrics_spec;
    out.push(Block::Section(SECTION_TITLES[3]));
    out.push(Block::Heading(3, "Performance measures".to_string()));
    if m.performance_measures.is_empty() {
        out.push(Block::Para(NOT_PROVIDED.to_string()));
    } else {
        out.push(Block::Fields(
            m.performance_measures
                .iter()
                .map(|p| {
                    (
                        p.metric.display_name().to_string(),
                        text_or_placeholder(&p.rationale),
                    )
                })
                .collect(),
        ));
    }
    out.push(Block::Heading(3, "Decision thresholds".to_string()));
    if m.decision_thresholds.is_empty() {
        out.push(Block::Para(NOT_PROVIDED.to_string()));
    } else {
        out.push(Block::List(
            m.decision_thresholds
                .iter()
                .map(|t| t.to_string())
                .collect(),
        ));
    }
    out.push(Block::Heading(3, "Variation approach".to_string()));
    let v = &m.variation_approach;
    let mut variation = match v.method {
        CiMethod::Bootstrap => format!(
            "Percentile bootstrap over records, {} replicates, level {}.",
            v.replicates, v.level
        ),
        CiMethod::BetaPosterior => format!(
            "Beta posterior intervals with a Beta({0}, {0}) prior, level {1}.",
            v.prior, v.level
        ),
    };
    if let Some(seed) = v.seed {
        variation.push_str(&format!(" Seed {seed}."));
    }
    out.push(Block::Para(variation));

    out.push(Block::Section(SECTION_TITLES[4]));
    for ds in &card.evaluation_data {
        out.push(Block::Heading(3, text_or_placeholder(&ds.name)));
        let mut fields = vec![
            (
                "Motivation".to_string(),
                text_or_placeholder(&ds.motivation),
            ),
            (
                "Preprocessing".to_string(),
                text_or_placeholder(&ds.preprocessing),
            ),
        ];
        if let Some(link) = &ds.provenance_link {
            fields.push(("Source".to_string(), link.clone()));
        }
        out.push(Block::Fields(fields));
    }

    let t = &card.training_data;
    out.push(Block::Section(SECTION_TITLES[5]));
    if t.detail_level == DetailLevel::Unavailable {
        out.push(Block::Notice(
            "Training data details are not available.".to_string(),
        ));
    }
    if !t.body.trim().is_empty() || t.detail_level != DetailLevel::Unavailable {
        out.push(Block::Para(text_or_placeholder(&t.body)));
    }
    for (factor, dist) in t.group_distributions.iter().flatten() {
        out.push(Block::Heading(3, format!("Distribution over {factor}")));
        out.push(Block::Table {
            headers: vec!["Value".to_string(), "Proportion".to_string()],
            rows: dist
                .iter()
                .map(|(k, p)| vec![k.clone(), p.to_string()])
                .collect(),
        });
    }

    out.push(Block::Section(SECTION_TITLES[6]));
    match &card.quantitative_analyses {
        Some(blocks) if !blocks.is_empty() => {
            for qa in blocks {
                analyses_blocks(&mut out, qa);
            }
            if blocks.len() > 1 {
                comparison_blocks(&mut out, blocks);
            }
        }
        _ => out.push(Block::Notice(
            "Quantitative analyses not yet computed.".to_string(),
        )),
    }

    let e = &card.ethical_considerations;
    out.push(Block::Section(SECTION_TITLES[7]));
    out.push(Block::Fields(vec![
        (
            "Sensitive data".into(),
            text_or_placeholder(&e.sensitive_data),
        ),
        ("Human life".into(), text_or_placeholder(&e.human_life)),
        ("Mitigations".into(), text_or_placeholder(&e.mitigations)),
        (
            "Risks and harms".into(),
            text_or_placeholder(&e.risks_and_harms),
        ),
        (
            "Fraught use cases".into(),
            text_or_placeholder(&e.fraught_use_cases),
        ),
    ]));

    out.push(Block::Section(SECTION_TITLES[8]));
    list_or_placeholder(&mut out, &card.caveats_recommendations);
    out
}
