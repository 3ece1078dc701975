//! Regenerates the committed fixtures under `tests/fixtures/`.
//!
//!     cargo run -p cardsmith --release --example build_fixtures

use std::fs;
use std::path::Path;

use cardsmith::demo;
use cardsmith::ingest::{expand_templates, write_csv, write_jsonl};
use cardsmith::save_card;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    fs::create_dir_all(&dir)?;

    let smiling = demo::smiling_evaluation_set(demo::SMILING_RECORDS_PER_CELL, demo::SMILING_SEED);
    fs::write(dir.join("smiling.csv"), write_csv(&smiling)?)?;
    fs::write(
        dir.join("smiling.schema.json"),
        serde_json::to_string_pretty(&demo::smiling_schemas())? + "\n",
    )?;
    fs::write(
        dir.join("smiling.template.json"),
        save_card(&demo::smiling_card_text()),
    )?;
    fs::write(
        dir.join("smiling.card.json"),
        save_card(&demo::smiling_card()?),
    )?;

    let templates = demo::toxicity_templates();
    fs::write(
        dir.join("toxicity.templates.json"),
        serde_json::to_string_pretty(&templates)? + "\n",
    )?;
    let expanded = expand_templates(&templates)?;
    fs::write(
        dir.join("toxicity.jsonl"),
        write_jsonl(&expanded.set, Some(&expanded.texts)),
    )?;
    for (label, biased) in [("v1", &demo::V1_BIASED_TERMS[..]), ("v5", &[][..])] {
        let scores = demo::toxicity_scores(&expanded, biased, demo::TOXICITY_SEED);
        let mut ids: Vec<&String> = scores.keys().collect();
        ids.sort();
        let mut csv = String::from("id,score\n");
        for id in ids {
            csv.push_str(&format!("{id},{}\n", scores[id]));
        }
        fs::write(dir.join(format!("toxicity.scores.{label}.csv")), csv)?;
    }
    fs::write(
        dir.join("toxicity.template.json"),
        save_card(&demo::toxicity_card_text()),
    )?;
    fs::write(
        dir.join("toxicity.card.json"),
        save_card(&demo::toxicity_card()?),
    )?;
    Ok(())
}
