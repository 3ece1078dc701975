use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cardsmith::card::{
    load_card, load_card_with, save_card, scaffold, validate_card, DatasetDoc, FactorNote,
    LoadMode, MeasureNote, ModelCard, ValidationReport,
};
use cardsmith::ingest::{
    expand_templates, join_scores, parse_records, parse_scores, write_jsonl, EvaluationSet,
    FactorSchema, Format, TemplateSpec,
};
use cardsmith::metrics::MetricId;
use cardsmith::report::{
    assemble_quantitative, render_html, render_json, render_markdown, upsert_analyses,
    QuantitativeAnalyses, ReportError, SliceResult,
};

use crate::config::{resolve, FileConfig, RunConfig};
use crate::{EvaluateArgs, RenderFormat};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INCOMPLETE: u8 = 2;

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_card(path: &Path) -> Result<ModelCard> {
    load_card(&read(path)?).with_context(|| format!("loading card {}", path.display()))
}

pub fn init(path: &Path, force: bool) -> Result<u8> {
    if path.exists() && !force {
        bail!(
            "{} already exists; pass --force to overwrite",
            path.display()
        );
    }
    write_atomic(path, &save_card(&scaffold()))?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn load_set(run: &RunConfig) -> Result<EvaluationSet> {
    let schemas: Vec<FactorSchema> = serde_json::from_slice(&read(&run.schema)?)
        .with_context(|| format!("parsing schema {}", run.schema.display()))?;
    let mut sets = Vec::with_capacity(run.inputs.len());
    for path in &run.inputs {
        let format = run
            .format
            .or_else(|| Format::from_path(path))
            .with_context(|| {
                format!(
                    "cannot tell the format of {}; pass --format",
                    path.display()
                )
            })?;
        let set = parse_records(&run.analysis.dataset, &read(path)?, format, &schemas)
            .with_context(|| format!("{}", path.display()))?;
        sets.push(set);
    }
    let mut set = if sets.len() == 1 {
        sets.pop().expect("one set")
    } else {
        let records = sets.into_iter().flat_map(|s| s.into_parts().2).collect();
        EvaluationSet::new(run.analysis.dataset.clone(), schemas, records)
            .context("combining inputs")?
    };
    if let Some(path) = &run.scores {
        let format = Format::from_path(path).unwrap_or(Format::Csv);
        let scores =
            parse_scores(&read(path)?, format).with_context(|| format!("{}", path.display()))?;
        set = join_scores(&set, &scores).with_context(|| format!("joining {}", path.display()))?;
    }
    Ok(set)
}

/// Fills documentation that the run itself determines, where the card left
/// it blank.
fn fill_from_run(card: &mut ModelCard, run: &RunConfig) {
    let a = &run.analysis;
    let spec = &mut card.metrics_spec;
    if spec.performance_measures.is_empty() {
        spec.performance_measures = a
            .metrics
            .iter()
            .map(|&metric| MeasureNote {
                metric,
                rationale: String::new(),
            })
            .collect();
    }
    if spec.decision_thresholds.is_empty() {
        spec.decision_thresholds = a.thresholds.clone();
    }
    let v = &mut spec.variation_approach;
    v.method = a.ci_method;
    v.replicates = a.replicates;
    v.level = a.level;
    v.prior = a.prior;
    if a.seed.is_some() {
        v.seed = a.seed;
    }
    if card.factors.evaluation_factors.is_empty() {
        card.factors.evaluation_factors = a
            .factors
            .iter()
            .map(|name| FactorNote {
                name: name.clone(),
                rationale: String::new(),
            })
            .collect();
    }
    if card
        .evaluation_data
        .iter()
        .all(|d| d.name.trim().is_empty())
    {
        card.evaluation_data = vec![DatasetDoc {
            name: a.dataset.clone(),
            ..DatasetDoc::default()
        }];
    }
}

fn summary_row(s: &SliceResult, columns: &[(MetricId, Option<f64>)]) -> Vec<String> {
    let mut row = vec![s.key.to_string()];
    if s.suppressed {
        row.push("suppressed".to_string());
        row.extend(columns.iter().map(|_| String::new()));
        return row;
    }
    row.push(s.n.map(|n| n.to_string()).unwrap_or_default());
    for &(m, t) in columns {
        row.push(match s.metric(m, t) {
            Some(r) => match (r.value.get(), r.interval()) {
                (Some(v), Some((lo, hi))) => format!("{v:.3} [{lo:.3}, {hi:.3}]"),
                (Some(v), None) => format!("{v:.3}"),
                (None, _) => "undefined".to_string(),
            },
            None => String::new(),
        });
    }
    row
}

fn print_summary(qa: &QuantitativeAnalyses) {
    let cfg = &qa.config;
    let mut columns: Vec<(MetricId, Option<f64>)> = Vec::new();
    if let Some(&t) = cfg.thresholds.first() {
        columns.extend(
            cfg.metrics
                .iter()
                .filter(|m| m.is_rate())
                .map(|&m| (m, Some(t))),
        );
    }
    for m in [MetricId::Auc, MetricId::PinnedAuc] {
        if cfg.metrics.contains(&m) {
            columns.push((m, None));
        }
    }
    let mut header = vec!["slice".to_string(), "n".to_string()];
    header.extend(columns.iter().map(|(m, t)| match t {
        Some(t) => format!("{m}@{t}"),
        None => m.to_string(),
    }));
    let rows: Vec<Vec<String>> = qa.all_slices().map(|s| summary_row(s, &columns)).collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .chain([&header])
                .map(|r| r[i].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        println!("{}", cells.join("  ").trim_end());
    }
}

fn print_incomplete(report: &ValidationReport) {
    eprint!("{report}");
}

fn render_bytes(card: &ModelCard, format: RenderFormat) -> Result<Vec<u8>, ReportError> {
    Ok(match format {
        RenderFormat::Md => render_markdown(card)?.into_bytes(),
        RenderFormat::Html => render_html(card)?.into_bytes(),
        RenderFormat::Json => render_json(card)?,
    })
}

pub fn evaluate(args: EvaluateArgs) -> Result<u8> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let card_path = args.card.clone().or_else(|| file.card.clone());
    let template = card_path.as_deref().map(read_card).transpose()?;
    let run = resolve(args, file, template.as_ref())?;

    let set = load_set(&run)?;
    let mut card = template.unwrap_or_else(scaffold);
    let label = run
        .version_label
        .clone()
        .filter(|l| !l.trim().is_empty())
        .or_else(|| Some(card.model_details.version.clone()).filter(|v| !v.trim().is_empty()))
        .unwrap_or_else(|| "1".to_string());
    let qa = assemble_quantitative(&set, &run.analysis, &label)?;
    print_summary(&qa);
    fill_from_run(&mut card, &run);
    upsert_analyses(&mut card, qa);

    write_atomic(&run.out, &save_card(&card))?;
    println!("wrote {}", run.out.display());

    let report = validate_card(&card);
    if !report.is_complete() {
        print_incomplete(&report);
        if !run.render.is_empty() {
            eprintln!("not rendering an incomplete card");
        }
        return Ok(EXIT_INCOMPLETE);
    }
    for &format in &run.render {
        let path = run.out.with_extension(format.extension());
        if path == run.out {
            bail!(
                "rendered {} would overwrite {}",
                format.extension(),
                run.out.display()
            );
        }
        write_atomic(&path, &render_bytes(&card, format)?)?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

pub fn validate(path: &Path, lax: bool, json: bool) -> Result<u8> {
    let mode = if lax { LoadMode::Lax } else { LoadMode::Strict };
    let (card, load_warnings) = load_card_with(&read(path)?, mode)
        .with_context(|| format!("loading card {}", path.display()))?;
    let mut report = validate_card(&card);
    report.warnings.splice(0..0, load_warnings);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    Ok(if report.is_complete() {
        EXIT_OK
    } else {
        EXIT_INCOMPLETE
    })
}

pub fn render(path: &Path, format: RenderFormat, out: Option<&Path>) -> Result<u8> {
    let card = read_card(path)?;
    let bytes = match render_bytes(&card, format) {
        Ok(b) => b,
        Err(ReportError::Incomplete(report)) => {
            eprintln!("refusing to render an incomplete card");
            print_incomplete(&report);
            return Ok(EXIT_INCOMPLETE);
        }
        Err(e) => return Err(e.into()),
    };
    match out {
        Some(p) => {
            write_atomic(p, &bytes)?;
            println!("wrote {}", p.display());
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(EXIT_OK)
}

pub fn expand(templates: &Path, out: &Path, schema_out: Option<&Path>) -> Result<u8> {
    let spec: TemplateSpec = serde_json::from_slice(&read(templates)?)
        .with_context(|| format!("parsing template spec {}", templates.display()))?;
    let expanded = expand_templates(&spec)?;
    write_atomic(
        out,
        write_jsonl(&expanded.set, Some(&expanded.texts)).as_bytes(),
    )?;
    println!("wrote {} ({} records)", out.display(), expanded.set.len());
    if let Some(p) = schema_out {
        let mut bytes = serde_json::to_vec_pretty(expanded.set.schemas())?;
        bytes.push(b'\n');
        write_atomic(p, &bytes)?;
        println!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}
