use std::fmt::Write;

use super::document::{build, Block};
use super::{require_complete, ReportError};
use crate::card::{save_card, ModelCard};

/// Element id of the embedded card JSON.
pub const CARD_DATA_ID: &str = "model-card-data";

const STYLE: &str =
    "body{font-family:system-ui,sans-serif;max-width:60rem;margin:2rem auto;padding:0 1rem;\
color:#1b1b1b;line-height:1.45}\
h1{border-bottom:2px solid #444;padding-bottom:.3rem}\
section{border-top:1px solid #ccc;margin-top:1.5rem}\
table{border-collapse:collapse;margin:.5rem 0 1rem;font-size:.9rem}\
th,td{border:1px solid #bbb;padding:.25rem .5rem;text-align:left}\
th{background:#f0f0f0}\
td{font-variant-numeric:tabular-nums}\
.notice{background:#fff6d6;border-left:4px solid #d4a800;padding:.5rem .75rem}";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// JSON is safe inside a script element once `</` cannot close it.
fn embed_json(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).replace("</", "<\\/")
}

fn write_blocks(blocks: &[Block], out: &mut String) {
    let mut open_section = false;
    for b in blocks {
        match b {
            Block::Title(t) => writeln!(out, "<h1>{}</h1>", escape(t)),
            Block::Section(t) => {
                if open_section {
                    out.push_str("</section>\n");
                }
                open_section = true;
                writeln!(out, "<section>\n<h2>{}</h2>", escape(t))
            }
            Block::Heading(level, t) => writeln!(out, "<h{level}>{}</h{level}>", escape(t)),
            Block::Fields(fields) => {
                out.push_str("<ul>\n");
                for (label, value) in fields {
                    writeln!(
                        out,
                        "<li><strong>{}:</strong> {}</li>",
                        escape(label),
                        escape(value)
                    )
                    .unwrap();
                }
                writeln!(out, "</ul>")
            }
            Block::List(items) => {
                out.push_str("<ul>\n");
                for item in items {
                    writeln!(out, "<li>{}</li>", escape(item)).unwrap();
                }
                writeln!(out, "</ul>")
            }
            Block::Para(t) => writeln!(out, "<p>{}</p>", escape(t)),
            Block::Notice(t) => writeln!(out, "<p class=\"notice\">{}</p>", escape(t)),
            Block::Table { headers, rows } => {
                out.push_str("<table>\n<thead><tr>");
                for h in headers {
                    write!(out, "<th>{}</th>", escape(h)).unwrap();
                }
                out.push_str("</tr></thead>\n<tbody>\n");
                for row in rows {
                    out.push_str("<tr>");
                    for c in row {
                        write!(out, "<td>{}</td>", escape(c)).unwrap();
                    }
                    out.push_str("</tr>\n");
                }
                writeln!(out, "</tbody>\n</table>")
            }
        }
        .unwrap();
    }
    if open_section {
        out.push_str("</section>\n");
    }
}

/// A self-contained page: inline styles, no external assets, and the card's
/// canonical JSON embedded for the viewer.
pub fn render_html(card: &ModelCard) -> Result<String, ReportError> {
    require_complete(card)?;
    let blocks = build(card);
    let title = match blocks.first() {
        Some(Block::Title(t)) => t.clone(),
        _ => "Model Card".to_string(),
    };
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    writeln!(out, "<title>{}</title>", escape(&title)).unwrap();
    writeln!(out, "<style>{STYLE}</style>\n</head>\n<body>\n<main>").unwrap();
    write_blocks(&blocks, &mut out);
    out.push_str("</main>\n");
    writeln!(
        out,
        "<script type=\"application/json\" id=\"{CARD_DATA_ID}\">\n{}</script>",
        embed_json(&save_card(card))
    )
    .unwrap();
    out.push_str("</body>\n</html>\n");
    Ok(out)
}
