//! Model cards for trained classifiers: structured documentation plus
//! disaggregated, interval-bearing quantitative analyses.
//!
//! The pipeline is: [`ingest`] an evaluation set, [`slicer`] it by factor,
//! compute [`metrics`] and [`uncertainty`] per slice, assemble the results
//! into a [`card::ModelCard`] with [`report::assemble_quantitative`], and
//! validate and render the card.

pub mod card;
pub mod demo;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod slicer;
pub mod uncertainty;

pub use card::{load_card, save_card, validate_card, ModelCard, ValidationReport};
pub use ingest::{EvaluationRecord, EvaluationSet, FactorSchema};
pub use metrics::{MetricId, MetricValue};
pub use report::{
    assemble_quantitative, render_html, render_json, render_markdown, AnalysisConfig,
};
pub use slicer::SliceKey;
