use std::fmt::Write;

use super::document::{build, Block};
use super::{require_complete, ReportError};
use crate::card::ModelCard;

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn write_blocks(blocks: &[Block]) -> String {
    let mut out = String::new();
    for b in blocks {
        match b {
            Block::Title(t) => writeln!(out, "# {t}\n"),
            Block::Section(t) => writeln!(out, "## {t}\n"),
            Block::Heading(level, t) => writeln!(out, "{} {t}\n", "#".repeat(*level as usize)),
            Block::Fields(fields) => {
                for (label, value) in fields {
                    writeln!(out, "- **{label}:** {value}").unwrap();
                }
                writeln!(out)
            }
            Block::List(items) => {
                for item in items {
                    writeln!(out, "- {item}").unwrap();
                }
                writeln!(out)
            }
            Block::Para(t) => writeln!(out, "{t}\n"),
            Block::Notice(t) => writeln!(out, "> {t}\n"),
            Block::Table { headers, rows } => {
                let head: Vec<String> = headers.iter().map(|h| cell(h)).collect();
                writeln!(out, "| {} |", head.join(" | ")).unwrap();
                writeln!(out, "|{}", "---|".repeat(headers.len())).unwrap();
                for row in rows {
                    let cells: Vec<String> = row.iter().map(|c| cell(c)).collect();
                    writeln!(out, "| {} |", cells.join(" | ")).unwrap();
                }
                writeln!(out)
            }
        }
        .unwrap();
    }
    // One trailing newline.
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

/// Markdown with one `##` heading per card section.
pub fn render_markdown(card: &ModelCard) -> Result<String, ReportError> {
    require_complete(card)?;
    Ok(write_blocks(&build(card)))
}
