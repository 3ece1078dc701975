//! Evaluation data: factor schemas, per-example records, CSV/JSONL parsing,
//! identity-template expansion and score joining.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Factor value that marks a missing annotation. Records carrying it are left
/// out of that factor's slices.
pub const UNKNOWN: &str = "unknown";

/// Token substituted by each identity term during template expansion.
pub const PLACEHOLDER: &str = "{term}";

/// Column names with a fixed meaning; factors may not reuse them.
pub const RESERVED_COLUMNS: [&str; 4] = ["id", "label", "score", "text"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error("factor schema `{name}`: {message}")]
    Schema { name: String, message: String },
    #[error("evaluation set has no records")]
    Empty,
    #[error("record `{id}`: {message}")]
    Record { id: String, message: String },
    #[error("missing scores for {count} record(s): {}", .first.join(", "))]
    MissingScores { count: usize, first: Vec<String> },
    #[error("score for `{id}` out of range: {score}")]
    ScoreOutOfRange { id: String, score: f64 },
    #[error("template spec: {0}")]
    Template(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(format!(
                "label must be `positive` or `negative`, got `{other}`"
            )),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    #[default]
    Categorical,
}

/// Where a factor annotation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SelfIdentified,
    Perceived,
    PublicFigure,
    NonHuman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSchema {
    pub name: String,
    #[serde(default)]
    pub kind: FactorKind,
    pub values: Vec<String>,
    pub provenance: Provenance,
}

impl FactorSchema {
    pub fn new<S: Into<String>>(
        name: &str,
        values: impl IntoIterator<Item = S>,
        provenance: Provenance,
    ) -> Self {
        Self {
            name: name.to_string(),
            kind: FactorKind::Categorical,
            values: values.into_iter().map(Into::into).collect(),
            provenance,
        }
    }

    pub fn allows_unknown(&self) -> bool {
        self.values.iter().any(|v| v == UNKNOWN)
    }

    pub fn position(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }

    /// Values that define slices, i.e. everything except `unknown`.
    pub fn known_values(&self) -> impl Iterator<Item = &str> {
        self.values
            .iter()
            .map(String::as_str)
            .filter(|v| *v != UNKNOWN)
    }

    fn check(&self) -> Result<(), IngestError> {
        let err = |message: &str| IngestError::Schema {
            name: self.name.clone(),
            message: message.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(err("name is empty"));
        }
        if RESERVED_COLUMNS.contains(&self.name.as_str()) {
            return Err(err("name collides with a reserved column"));
        }
        if self.values.is_empty() {
            return Err(err("no values declared"));
        }
        let mut seen = HashSet::new();
        for v in &self.values {
            if v.is_empty() {
                return Err(err("empty value label"));
            }
            if !seen.insert(v.as_str()) {
                return Err(err(&format!("duplicate value `{v}`")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub id: String,
    pub gold_label: Label,
    /// `None` until a model score is attached.
    pub score: Option<f64>,
    pub factor_values: BTreeMap<String, String>,
}

/// A validated evaluation dataset. Construction checks every record against
/// the schemas, so a value of this type always satisfies its invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    name: String,
    schemas: Vec<FactorSchema>,
    records: Vec<EvaluationRecord>,
}

impl EvaluationSet {
    pub fn new(
        name: impl Into<String>,
        schemas: Vec<FactorSchema>,
        records: Vec<EvaluationRecord>,
    ) -> Result<Self, IngestError> {
        check_schemas(&schemas)?;
        if records.is_empty() {
            return Err(IngestError::Empty);
        }
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            let rec_err = |message: String| IngestError::Record {
                id: r.id.clone(),
                message,
            };
            if !ids.insert(r.id.as_str()) {
                return Err(rec_err("duplicate id".into()));
            }
            if let Some(s) = r.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(IngestError::ScoreOutOfRange {
                        id: r.id.clone(),
                        score: s,
                    });
                }
            }
            for (factor, value) in &r.factor_values {
                let schema = schemas
                    .iter()
                    .find(|s| &s.name == factor)
                    .ok_or_else(|| rec_err(format!("undeclared factor `{factor}`")))?;
                if schema.position(value).is_none() {
                    return Err(rec_err(format!(
                        "unknown value `{value}` for factor `{factor}`"
                    )));
                }
            }
            if let Some(missing) = schemas
                .iter()
                .find(|s| !r.factor_values.contains_key(&s.name))
            {
                return Err(rec_err(format!("no value for factor `{}`", missing.name)));
            }
        }
        Ok(Self {
            name: name.into(),
            schemas,
            records,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schemas(&self) -> &[FactorSchema] {
        &self.schemas
    }

    pub fn schema(&self, factor: &str) -> Option<&FactorSchema> {
        self.schemas.iter().find(|s| s.name == factor)
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_fully_scored(&self) -> bool {
        self.records.iter().all(|r| r.score.is_some())
    }

    pub fn into_parts(self) -> (String, Vec<FactorSchema>, Vec<EvaluationRecord>) {
        (self.name, self.schemas, self.records)
    }
}

fn check_schemas(schemas: &[FactorSchema]) -> Result<(), IngestError> {
    let mut names = HashSet::new();
    for s in schemas {
        s.check()?;
        if !names.insert(s.name.as_str()) {
            return Err(IngestError::Schema {
                name: s.name.clone(),
                message: "declared twice".into(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

impl Format {
    /// Guess from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "jsonl" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

/// One raw row: column name to cell text (`None` for an empty/absent cell).
type RawRow = HashMap<String, Option<String>>;

/// Parses an evaluation file. Rows are numbered from 1, not counting the CSV
/// header; for JSONL the row number is the line number.
pub fn parse_records(
    name: &str,
    bytes: &[u8],
    format: Format,
    schemas: &[FactorSchema],
) -> Result<EvaluationSet, IngestError> {
    check_schemas(schemas)?;
    let rows = match format {
        Format::Csv => read_csv_rows(bytes, schemas)?,
        Format::Jsonl => read_jsonl_rows(bytes, schemas)?,
    };
    let mut ids = HashSet::with_capacity(rows.len());
    let mut records = Vec::with_capacity(rows.len());
    for (row, cells) in rows {
        let record = record_from_row(row, &cells, schemas)?;
        if !ids.insert(record.id.clone()) {
            return Err(IngestError::Row {
                row,
                message: format!("duplicate id `{}`", record.id),
            });
        }
        records.push(record);
    }
    EvaluationSet::new(name, schemas.to_vec(), records)
}

fn check_columns<'a>(
    columns: impl IntoIterator<Item = &'a str>,
    schemas: &[FactorSchema],
) -> Result<(), String> {
    let columns: Vec<&str> = columns.into_iter().collect();
    for required in ["id", "label", "score"] {
        if !columns.contains(&required) {
            return Err(format!("missing column `{required}`"));
        }
    }
    for s in schemas {
        if !columns.contains(&s.name.as_str()) {
            return Err(format!("missing factor column `{}`", s.name));
        }
    }
    let mut seen = HashSet::new();
    for c in &columns {
        if !seen.insert(*c) {
            return Err(format!("duplicate column `{c}`"));
        }
        if !RESERVED_COLUMNS.contains(c) && !schemas.iter().any(|s| s.name == *c) {
            return Err(format!("undeclared column `{c}`"));
        }
    }
    Ok(())
}

fn read_csv_rows(
    bytes: &[u8],
    schemas: &[FactorSchema],
) -> Result<Vec<(usize, RawRow)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    check_columns(headers.iter().map(String::as_str), schemas).map_err(IngestError::Header)?;
    let mut rows = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row = i + 1;
        let record = result.map_err(|e| IngestError::Row {
            row,
            message: e.to_string(),
        })?;
        let cells = headers
            .iter()
            .zip(record.iter())
            .map(|(h, v)| {
                let v = v.trim();
                (h.clone(), (!v.is_empty()).then(|| v.to_string()))
            })
            .collect();
        rows.push((row, cells));
    }
    Ok(rows)
}

fn read_jsonl_rows(
    bytes: &[u8],
    schemas: &[FactorSchema],
) -> Result<Vec<(usize, RawRow)>, IngestError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IngestError::Header(format!("input is not UTF-8: {e}")))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| IngestError::Row { row, message };
        let value: Value =
            serde_json::from_str(line).map_err(|e| row_err(format!("invalid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(row_err("expected a JSON object".into()));
        };
        check_columns(map.keys().map(String::as_str), schemas).map_err(row_err)?;
        let mut cells = RawRow::with_capacity(map.len());
        for (k, v) in map {
            let cell = match v {
                Value::Null => None,
                Value::String(s) if s.trim().is_empty() => None,
                Value::String(s) => Some(s),
                Value::Number(n) => Some(n.to_string()),
                Value::Bool(b) => Some(b.to_string()),
                other => {
                    return Err(row_err(format!(
                        "field `{k}` has unsupported value {other}"
                    )))
                }
            };
            cells.insert(k, cell);
        }
        rows.push((row, cells));
    }
    Ok(rows)
}

fn record_from_row(
    row: usize,
    cells: &RawRow,
    schemas: &[FactorSchema],
) -> Result<EvaluationRecord, IngestError> {
    let row_err = |message: String| IngestError::Row { row, message };
    let cell = |name: &str| cells.get(name).and_then(|c| c.as_deref());

    let id = cell("id")
        .ok_or_else(|| row_err("missing id".into()))?
        .to_string();
    let gold_label = cell("label")
        .ok_or_else(|| row_err("missing label".into()))?
        .parse::<Label>()
        .map_err(row_err)?;
    let score = cell("score")
        .map(parse_score)
        .transpose()
        .map_err(row_err)?;

    let mut factor_values = BTreeMap::new();
    for schema in schemas {
        let value = match cell(&schema.name) {
            Some(v) => v.to_string(),
            None if schema.allows_unknown() => UNKNOWN.to_string(),
            None => {
                return Err(row_err(format!(
                    "missing value for factor `{}`",
                    schema.name
                )))
            }
        };
        if schema.position(&value).is_none() {
            return Err(row_err(format!(
                "unknown value `{value}` for factor `{}`",
                schema.name
            )));
        }
        factor_values.insert(schema.name.clone(), value);
    }
    Ok(EvaluationRecord {
        id,
        gold_label,
        score,
        factor_values,
    })
}

/// Numeric scores must lie in [0, 1]. A predicted label (`positive` /
/// `negative`) stands in for a hard-label model and maps to 1.0 / 0.0.
fn parse_score(raw: &str) -> Result<f64, String> {
    if let Ok(label) = raw.parse::<Label>() {
        return Ok(if label.is_positive() { 1.0 } else { 0.0 });
    }
    let score: f64 = raw
        .parse()
        .map_err(|_| format!("score `{raw}` is not a number"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score out of range ({raw})"));
    }
    Ok(score)
}

/// Reads an `id,score` table (CSV with header, or JSONL objects) into a map.
pub fn parse_scores(bytes: &[u8], format: Format) -> Result<HashMap<String, f64>, IngestError> {
    let mut scores = HashMap::new();
    let mut insert =
        |row: usize, id: Option<String>, raw: Option<String>| -> Result<(), IngestError> {
            let row_err = |message: String| IngestError::Row { row, message };
            let id = id.ok_or_else(|| row_err("missing id".into()))?;
            let raw = raw.ok_or_else(|| row_err("missing score".into()))?;
            let score = parse_score(&raw).map_err(row_err)?;
            if scores.insert(id.clone(), score).is_some() {
                return Err(row_err(format!("duplicate id `{id}`")));
            }
            Ok(())
        };
    match format {
        Format::Csv => {
            let mut reader = csv::Reader::from_reader(bytes);
            let headers = reader.headers()?.clone();
            let id_col = headers.iter().position(|h| h.trim() == "id");
            let score_col = headers.iter().position(|h| h.trim() == "score");
            let (Some(id_col), Some(score_col)) = (id_col, score_col) else {
                return Err(IngestError::Header(
                    "score table needs `id` and `score` columns".into(),
                ));
            };
            for (i, rec) in reader.records().enumerate() {
                let rec = rec.map_err(|e| IngestError::Row {
                    row: i + 1,
                    message: e.to_string(),
                })?;
                let get = |c: usize| {
                    rec.get(c)
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                };
                insert(i + 1, get(id_col), get(score_col))?;
            }
        }
        Format::Jsonl => {
            let rows = read_jsonl_objects(bytes)?;
            for (row, map) in rows {
                let get = |k: &str| match map.get(k) {
                    Some(Value::String(s)) => Some(s.clone()),
                    Some(Value::Number(n)) => Some(n.to_string()),
                    _ => None,
                };
                insert(row, get("id"), get("score"))?;
            }
        }
    }
    Ok(scores)
}

/// JSON objects keyed by their 1-based line number.
type NumberedObjects = Vec<(usize, serde_json::Map<String, Value>)>;

fn read_jsonl_objects(bytes: &[u8]) -> Result<NumberedObjects, IngestError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IngestError::Header(format!("input is not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| IngestError::Row {
            row: i + 1,
            message,
        };
        match serde_json::from_str(line) {
            Ok(Value::Object(map)) => out.push((i + 1, map)),
            Ok(_) => return Err(row_err("expected a JSON object".into())),
            Err(e) => return Err(row_err(format!("invalid JSON: {e}"))),
        }
    }
    Ok(out)
}

/// Attaches externally computed scores. Every record id must be present in
/// `scores`; extra ids are ignored.
pub fn join_scores(
    set: &EvaluationSet,
    scores: &HashMap<String, f64>,
) -> Result<EvaluationSet, IngestError> {
    let missing: Vec<&str> = set
        .records
        .iter()
        .filter(|r| !scores.contains_key(&r.id))
        .map(|r| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingScores {
            count: missing.len(),
            first: missing.iter().take(10).map(|s| s.to_string()).collect(),
        });
    }
    let mut records = set.records.clone();
    for r in &mut records {
        let score = scores[&r.id];
        if !(0.0..=1.0).contains(&score) {
            return Err(IngestError::ScoreOutOfRange {
                id: r.id.clone(),
                score,
            });
        }
        r.score = Some(score);
    }
    Ok(EvaluationSet {
        name: set.name.clone(),
        schemas: set.schemas.clone(),
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityTerm {
    pub term: String,
    #[serde(default)]
    pub factor_values: BTreeMap<String, String>,
}

/// Identity-phrase template specification: every template is crossed with
/// every identity term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    #[serde(default = "default_template_name")]
    pub name: String,
    pub templates: Vec<String>,
    pub identity_terms: Vec<IdentityTerm>,
    pub labels: BTreeMap<String, Label>,
    /// Optional explicit schemas; derived from the identity terms when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemas: Option<Vec<FactorSchema>>,
}

fn default_template_name() -> String {
    "identity-templates".to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedTemplates {
    pub set: EvaluationSet,
    /// Sentence text for each record, aligned with `set.records()`.
    pub texts: Vec<String>,
}

pub fn template_record_id(template: usize, term: usize) -> String {
    format!("t{template:03}-i{term:03}")
}

pub fn expand_templates(spec: &TemplateSpec) -> Result<ExpandedTemplates, IngestError> {
    let err = |m: String| IngestError::Template(m);
    if spec.templates.is_empty() {
        return Err(err("no templates".into()));
    }
    if spec.identity_terms.is_empty() {
        return Err(err("no identity terms".into()));
    }
    for t in &spec.templates {
        let n = t.matches(PLACEHOLDER).count();
        if n != 1 {
            return Err(err(format!(
                "template `{t}` has {n} placeholders, expected exactly one {PLACEHOLDER}"
            )));
        }
        if !spec.labels.contains_key(t) {
            return Err(err(format!("template `{t}` has no label")));
        }
    }
    if let Some(extra) = spec.labels.keys().find(|k| !spec.templates.contains(k)) {
        return Err(err(format!("label given for unlisted template `{extra}`")));
    }

    let schemas = match &spec.schemas {
        Some(s) => s.clone(),
        None => derive_term_schemas(&spec.identity_terms),
    };
    let mut records = Vec::with_capacity(spec.templates.len() * spec.identity_terms.len());
    let mut texts = Vec::with_capacity(records.capacity());
    for (ti, template) in spec.templates.iter().enumerate() {
        let gold_label = spec.labels[template];
        for (ii, term) in spec.identity_terms.iter().enumerate() {
            let mut factor_values = term.factor_values.clone();
            for s in &schemas {
                factor_values
                    .entry(s.name.clone())
                    .or_insert_with(|| UNKNOWN.to_string());
            }
            records.push(EvaluationRecord {
                id: template_record_id(ti, ii),
                gold_label,
                score: None,
                factor_values,
            });
            texts.push(template.replacen(PLACEHOLDER, &term.term, 1));
        }
    }
    let set = EvaluationSet::new(spec.name.clone(), schemas, records)?;
    Ok(ExpandedTemplates { set, texts })
}

fn derive_term_schemas(terms: &[IdentityTerm]) -> Vec<FactorSchema> {
    let mut order: Vec<String> = Vec::new();
    let mut values: HashMap<String, Vec<String>> = HashMap::new();
    for t in terms {
        for (k, v) in &t.factor_values {
            if !values.contains_key(k) {
                order.push(k.clone());
            }
            let vs = values.entry(k.clone()).or_default();
            if !vs.contains(v) {
                vs.push(v.clone());
            }
        }
    }
    order
        .into_iter()
        .map(|name| {
            let mut vs = values.remove(&name).unwrap_or_default();
            if terms.iter().any(|t| !t.factor_values.contains_key(&name))
                && !vs.iter().any(|v| v == UNKNOWN)
            {
                vs.push(UNKNOWN.to_string());
            }
            FactorSchema::new(&name, vs, Provenance::NonHuman)
        })
        .collect()
}

/// Writes records as JSONL in the layout `parse_records` reads back. When
/// `texts` is given it must align with the records.
pub fn write_jsonl(set: &EvaluationSet, texts: Option<&[String]>) -> String {
    let mut out = String::new();
    for (i, r) in set.records.iter().enumerate() {
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), Value::String(r.id.clone()));
        obj.insert("label".into(), Value::String(r.gold_label.to_string()));
        obj.insert(
            "score".into(),
            r.score.map_or(Value::Null, |s| serde_json::json!(s)),
        );
        if let Some(t) = texts.and_then(|t| t.get(i)) {
            obj.insert("text".into(), Value::String(t.clone()));
        }
        for s in &set.schemas {
            obj.insert(
                s.name.clone(),
                Value::String(r.factor_values[&s.name].clone()),
            );
        }
        out.push_str(&Value::Object(obj).to_string());
        out.push('\n');
    }
    out
}

/// Writes records as CSV with columns `id,label,score,<factors...>`.
pub fn write_csv(set: &EvaluationSet) -> Result<String, IngestError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "label".into(), "score".into()];
    header.extend(set.schemas.iter().map(|s| s.name.clone()));
    w.write_record(&header)?;
    for r in &set.records {
        let mut row = vec![
            r.id.clone(),
            r.gold_label.to_string(),
            r.score.map(|s| s.to_string()).unwrap_or_default(),
        ];
        row.extend(set.schemas.iter().map(|s| r.factor_values[&s.name].clone()));
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| IngestError::Header(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}
