//! Resolves the effective run configuration from flags, an optional TOML
//! file, the card template and built-in defaults, in that order.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cardsmith::card::ModelCard;
use cardsmith::ingest::Format;
use cardsmith::metrics::MetricId;
use cardsmith::report::DEFAULT_SWEEP_STEP;
use cardsmith::slicer::DEFAULT_MIN_CELL;
use cardsmith::uncertainty::{CiMethod, DEFAULT_LEVEL, DEFAULT_PRIOR, DEFAULT_REPLICATES};
use cardsmith::AnalysisConfig;
use serde::Deserialize;

use crate::{EvaluateArgs, RenderFormat};

pub const SEED_ENV: &str = "CARDSMITH_SEED";
pub const DEFAULT_OUT: &str = "model_card.json";
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_METRICS: [MetricId; 4] = MetricId::RATES;

/// Same options as the flags. Relative paths are resolved against the
/// directory holding the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<Vec<PathBuf>>,
    pub format: Option<Format>,
    pub schema: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub factors: Option<Vec<String>>,
    pub intersect: Option<Vec<Vec<String>>>,
    pub thresholds: Option<Vec<f64>>,
    pub metrics: Option<Vec<MetricId>>,
    pub bootstrap: Option<usize>,
    pub level: Option<f64>,
    pub ci_method: Option<CiMethod>,
    pub prior: Option<f64>,
    pub seed: Option<u64>,
    pub min_cell: Option<usize>,
    pub sweep_step: Option<f64>,
    pub no_sweep: Option<bool>,
    pub card: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub render: Option<Vec<RenderFormat>>,
    pub version_label: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.input.iter_mut().flatten().for_each(resolve);
        for p in [
            &mut cfg.schema,
            &mut cfg.scores,
            &mut cfg.card,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }
}

/// Fully resolved options for one `evaluate` run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub format: Option<Format>,
    pub schema: PathBuf,
    pub scores: Option<PathBuf>,
    pub out: PathBuf,
    pub render: Vec<RenderFormat>,
    pub version_label: Option<String>,
    pub analysis: AnalysisConfig,
}

fn parse_tuple(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{SEED_ENV}=`{v}` is not an unsigned integer")),
        _ => Ok(None),
    }
}

/// Merges flags over the file config over the card template over defaults.
/// The seed falls back to the environment last.
pub fn resolve(
    args: EvaluateArgs,
    file: FileConfig,
    card: Option<&ModelCard>,
) -> Result<RunConfig> {
    let inputs = if args.input.is_empty() {
        file.input.unwrap_or_default()
    } else {
        args.input
    };
    if inputs.is_empty() {
        bail!("no --input given");
    }
    let Some(schema) = args.schema.or(file.schema) else {
        bail!("no --schema given");
    };
    let spec = card.map(|c| &c.metrics_spec);
    let variation = spec.map(|s| s.variation_approach);

    let factors = args
        .factors
        .or(file.factors)
        .or_else(|| card.map(|c| c.factors.evaluation_names()))
        .unwrap_or_default();
    let intersections = if args.intersect.is_empty() {
        file.intersect.unwrap_or_default()
    } else {
        args.intersect.iter().map(|s| parse_tuple(s)).collect()
    };
    let thresholds = args
        .thresholds
        .or(file.thresholds)
        .or_else(|| {
            spec.map(|s| s.decision_thresholds.clone())
                .filter(|t| !t.is_empty())
        })
        .unwrap_or_else(|| vec![DEFAULT_THRESHOLD]);
    let metrics = args
        .metrics
        .or(file.metrics)
        .or_else(|| spec.map(|s| s.metric_ids()).filter(|m| !m.is_empty()))
        .unwrap_or_else(|| DEFAULT_METRICS.to_vec());
    let no_sweep = args.no_sweep || (file.no_sweep.unwrap_or(false) && args.sweep_step.is_none());
    let sweep_step = if no_sweep {
        None
    } else {
        Some(
            args.sweep_step
                .or(file.sweep_step)
                .unwrap_or(DEFAULT_SWEEP_STEP),
        )
    };
    let seed = match args.seed.or(file.seed).or(variation.and_then(|v| v.seed)) {
        Some(s) => Some(s),
        None => env_seed()?,
    };
    let first_input = inputs[0].clone();
    let analysis = AnalysisConfig {
        dataset: first_input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "evaluation".to_string()),
        metrics,
        thresholds,
        sweep_step,
        ci_method: args
            .ci_method
            .or(file.ci_method)
            .or(variation.map(|v| v.method))
            .unwrap_or(CiMethod::Bootstrap),
        replicates: args
            .bootstrap
            .or(file.bootstrap)
            .or(variation.map(|v| v.replicates))
            .unwrap_or(DEFAULT_REPLICATES),
        level: args
            .level
            .or(file.level)
            .or(variation.map(|v| v.level))
            .unwrap_or(DEFAULT_LEVEL),
        prior: args
            .prior
            .or(file.prior)
            .or(variation.map(|v| v.prior))
            .unwrap_or(DEFAULT_PRIOR),
        seed,
        min_cell: args.min_cell.or(file.min_cell).unwrap_or(DEFAULT_MIN_CELL),
        factors,
        intersections,
    };
    if analysis.needs_seed() && analysis.seed.is_none() {
        bail!("a seed is required for bootstrap intervals and pinned AUC: pass --seed or set {SEED_ENV}");
    }
    let card_path = args.card.or(file.card);
    let out = args
        .out
        .or(file.out)
        .or_else(|| card_path.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(RunConfig {
        inputs,
        format: args.format.or(file.format),
        schema,
        scores: args.scores.or(file.scores),
        out,
        render: args.render.or(file.render).unwrap_or_default(),
        version_label: args.version_label.or(file.version_label),
        analysis,
    })
}
