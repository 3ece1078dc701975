//! `cardsmith`: evaluate a classifier by slice and write or check model cards.
//!
//! Exit codes: 0 success, 1 fault, 2 card incomplete.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use cardsmith::ingest::Format;
use cardsmith::metrics::MetricId;
use cardsmith::uncertainty::CiMethod;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cardsmith",
    version,
    about = "Disaggregated evaluation and model cards"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a blank card with every section present.
    Init {
        path: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Compute disaggregated metrics and merge them into a card.
    Evaluate(Box<EvaluateArgs>),
    /// Check a card for completeness.
    Validate {
        card: PathBuf,
        /// Drop unknown top-level keys with a warning instead of failing.
        #[arg(long)]
        lax: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Render a card as Markdown, HTML or canonical JSON.
    Render {
        card: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: RenderFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand an identity-term template spec into an evaluation file.
    Expand {
        /// Template spec (JSON).
        #[arg(long)]
        templates: PathBuf,
        /// Evaluation records (JSONL, with sentence text).
        #[arg(long)]
        out: PathBuf,
        /// Where to write the factor schemas of the expanded set.
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderFormat {
    Md,
    Html,
    Json,
}

impl RenderFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RenderFormat::Md => "md",
            RenderFormat::Html => "html",
            RenderFormat::Json => "json",
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct EvaluateArgs {
    /// TOML file with any of these options; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Evaluation records; repeat to concatenate files with the same schema.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    /// Factor schemas (JSON list).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Score table (`id`, `score`) joined onto the records.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Factors for unitary slices; defaults to the card's evaluation factors.
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    /// Factor tuple for intersectional slices, comma separated; repeatable.
    #[arg(long = "intersect")]
    pub intersect: Vec<String>,
    /// Decision thresholds in [0, 1]; a score at or above the threshold is positive.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Any of fpr, fnr, fdr, for, auc, pinned_auc, score_summary.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricId>>,
    /// Bootstrap replicates.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Interval level in (0, 1).
    #[arg(long)]
    pub level: Option<f64>,
    /// Interval method for rates: bootstrap or beta_posterior.
    #[arg(long)]
    pub ci_method: Option<CiMethod>,
    /// Symmetric Beta prior for beta_posterior intervals.
    #[arg(long)]
    pub prior: Option<f64>,
    /// Root seed; falls back to CARDSMITH_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Slices smaller than this are suppressed.
    #[arg(long)]
    pub min_cell: Option<usize>,
    /// Spacing of the per-slice threshold sweep.
    #[arg(long)]
    pub sweep_step: Option<f64>,
    /// Skip the threshold sweep.
    #[arg(long, conflicts_with = "sweep_step")]
    pub no_sweep: bool,
    /// Card to merge results into.
    #[arg(long)]
    pub card: Option<PathBuf>,
    /// Output card; defaults to --card, else model_card.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render the card next to --out.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub render: Option<Vec<RenderFormat>>,
    /// Label of the analyses block; defaults to the card's model version.
    #[arg(long)]
    pub version_label: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Init { path, force } => commands::init(&path, force),
        Command::Evaluate(args) => commands::evaluate(*args),
        Command::Validate { card, lax, json } => commands::validate(&card, lax, json),
        Command::Render { card, format, out } => commands::render(&card, format, out.as_deref()),
        Command::Expand {
            templates,
            out,
            schema_out,
        } => commands::expand(&templates, &out, schema_out.as_deref()),
    };
    match outcome {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
