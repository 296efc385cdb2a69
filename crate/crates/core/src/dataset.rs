//! Dataset ingestion and column type inference.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::digest::sha256_hex;
use crate::spec::ColumnTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    Csv,
    Tsv,
    JsonRows,
}

impl FromStr for DataFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "tsv" => Ok(DataFormat::Tsv),
            "json-rows" | "json" | "jsonl" => Ok(DataFormat::JsonRows),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Csv => "csv",
            DataFormat::Tsv => "tsv",
            DataFormat::JsonRows => "json-rows",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Quantitative,
    Nominal,
    Ordinal,
    Temporal,
}

impl ColumnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Quantitative => "quantitative",
            ColumnType::Nominal => "nominal",
            ColumnType::Ordinal => "ordinal",
            ColumnType::Temporal => "temporal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("dataset is {size} bytes; the limit is {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("unknown dataset format `{0}` (expected csv, tsv or json-rows)")]
    UnknownFormat(String),
    #[error("{} malformed row(s), first at line {}: {}", .0.len(), .0[0].line, .0[0].message)]
    Malformed(Vec<RowError>),
}

/// Thresholds for ingestion. Defaults: 10 MiB cap, 20-distinct cutoff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub max_bytes: usize,
    /// A non-numeric column with more distinct values than this is still
    /// nominal but never ordinal.
    pub distinct_cutoff: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { max_bytes: 10 * 1024 * 1024, distinct_cutoff: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
    pub digest: String,
}

/// Text-friendly digest of a table for prompting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub columns: Vec<Column>,
    pub row_count: usize,
    pub sample_rows: Vec<Vec<Value>>,
}

pub const SAMPLE_ROWS: usize = 5;

impl DataTable {
    pub fn column_table(&self) -> ColumnTable {
        ColumnTable::with_types(self.columns.iter().map(|c| (c.name.clone(), c.kind.as_str())))
    }

    pub fn summary(&self) -> DataSummary {
        DataSummary {
            columns: self.columns.clone(),
            row_count: self.rows.len(),
            sample_rows: self.rows.iter().take(SAMPLE_ROWS).cloned().collect(),
        }
    }
}

impl DataSummary {
    pub fn column_table(&self) -> ColumnTable {
        ColumnTable::with_types(self.columns.iter().map(|c| (c.name.clone(), c.kind.as_str())))
    }
}

pub fn ingest(bytes: &[u8], format: DataFormat) -> Result<DataTable, DatasetError> {
    ingest_with(bytes, format, &IngestConfig::default())
}

pub fn ingest_with(bytes: &[u8], format: DataFormat, cfg: &IngestConfig) -> Result<DataTable, DatasetError> {
    if bytes.len() > cfg.max_bytes {
        return Err(DatasetError::TooLarge { size: bytes.len(), cap: cfg.max_bytes });
    }
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count() + 1;
        DatasetError::Malformed(vec![RowError { line, message: "invalid UTF-8".into() }])
    })?;
    if text.trim().is_empty() {
        return Err(DatasetError::Empty);
    }
    let (names, rows) = match format {
        DataFormat::Csv => read_delimited(text, b',')?,
        DataFormat::Tsv => read_delimited(text, b'\t')?,
        DataFormat::JsonRows => read_json_rows(text)?,
    };
    if names.is_empty() || rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    let columns = names
        .iter()
        .enumerate()
        .map(|(i, name)| Column {
            name: name.clone(),
            kind: infer_type(name, rows.iter().map(|r| &r[i]), cfg),
        })
        .collect();
    Ok(DataTable { columns, rows, digest: sha256_hex(bytes) })
}

fn read_delimited(text: &str, delimiter: u8) -> Result<(Vec<String>, Vec<Vec<Value>>), DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header_err = |e: csv::Error| DatasetError::Malformed(vec![RowError { line: 1, message: e.to_string() }]);
    let names: Vec<String> = reader.headers().map_err(header_err)?.iter().map(|h| h.trim().to_string()).collect();
    let mut errors = Vec::new();
    let mut seen = BTreeSet::new();
    for name in &names {
        if name.is_empty() || !seen.insert(name.clone()) {
            errors.push(RowError { line: 1, message: format!("empty or duplicate column name `{name}`") });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        match record {
            Ok(record) => {
                let line = record.position().map_or(0, |p| p.line() as usize);
                if record.len() == 1 && record.get(0).is_some_and(|c| c.trim().is_empty()) {
                    continue;
                }
                if record.len() != names.len() {
                    errors.push(RowError {
                        line,
                        message: format!("expected {} fields, found {}", names.len(), record.len()),
                    });
                    continue;
                }
                rows.push(record.iter().map(cell_value).collect());
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                errors.push(RowError { line, message: e.to_string() });
            }
        }
    }
    if errors.is_empty() {
        Ok((names, rows))
    } else {
        Err(DatasetError::Malformed(errors))
    }
}

fn cell_value(cell: &str) -> Value {
    let cell = cell.trim();
    if cell.is_empty() {
        Value::Null
    } else {
        Value::String(cell.to_string())
    }
}

/// A JSON array of objects, or one object per line.
fn read_json_rows(text: &str) -> Result<(Vec<String>, Vec<Vec<Value>>), DatasetError> {
    let mut objects = Vec::new();
    let mut errors = Vec::new();
    if text.trim_start().starts_with('[') {
        let items: Vec<Value> = serde_json::from_str(text).map_err(|e| {
            DatasetError::Malformed(vec![RowError { line: e.line(), message: e.to_string() }])
        })?;
        for (i, item) in items.into_iter().enumerate() {
            match item {
                Value::Object(map) => objects.push(map),
                _ => errors.push(RowError { line: i + 1, message: "row is not an object".into() }),
            }
        }
    } else {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Value>(line) {
                Ok(Value::Object(map)) => objects.push(map),
                Ok(_) => errors.push(RowError { line: i + 1, message: "row is not an object".into() }),
                Err(e) => errors.push(RowError { line: i + 1, message: e.to_string() }),
            }
        }
    }
    if !errors.is_empty() {
        return Err(DatasetError::Malformed(errors));
    }
    let mut names: Vec<String> = Vec::new();
    for object in &objects {
        for key in object.keys() {
            if !names.contains(key) {
                names.push(key.clone());
            }
        }
    }
    let rows = objects
        .iter()
        .map(|o| {
            names
                .iter()
                .map(|n| match o.get(n) {
                    None | Some(Value::Null) => Value::Null,
                    Some(Value::String(s)) if s.trim().is_empty() => Value::Null,
                    Some(v) => v.clone(),
                })
                .collect()
        })
        .collect();
    Ok((names, rows))
}

/// Ordered vocabularies that make a categorical column ordinal.
const ORDERED_VOCABULARIES: &[&[&str]] = &[
    &["low", "medium", "high"],
    &["very low", "low", "medium", "high", "very high"],
    &["small", "medium", "large"],
    &["xs", "s", "m", "l", "xl", "xxl"],
    &["poor", "fair", "good", "very good", "excellent"],
    &["strongly disagree", "disagree", "neutral", "agree", "strongly agree"],
    &["never", "rarely", "sometimes", "often", "always"],
    &["mon", "tue", "wed", "thu", "fri", "sat", "sun"],
    &["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"],
    &["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"],
    &[
        "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
        "november", "december",
    ],
    &["q1", "q2", "q3", "q4"],
    &["first", "second", "third", "fourth", "fifth"],
];

const TIME_NAME_HINTS: &[&str] = &["year", "yr", "date", "time", "period"];

/// Inference order: ISO dates, numbers, ordered vocabularies, nominal.
/// Bare four-digit integers count as years only when the column name
/// suggests time, so numeric measures like `budget` stay quantitative.
pub fn infer_type<'a>(name: &str, values: impl Iterator<Item = &'a Value>, cfg: &IngestConfig) -> ColumnType {
    let texts: Vec<String> = values
        .filter(|v| !v.is_null())
        .map(|v| match v {
            Value::String(s) => s.trim().to_string(),
            other => other.to_string(),
        })
        .collect();
    if texts.is_empty() {
        return ColumnType::Nominal;
    }
    let lower_name = name.to_ascii_lowercase();
    let time_named = TIME_NAME_HINTS.iter().any(|h| lower_name.contains(h));
    if texts.iter().all(|t| is_iso_date(t) || (time_named && is_year(t))) {
        return ColumnType::Temporal;
    }
    if texts.iter().all(|t| t.parse::<f64>().is_ok_and(f64::is_finite)) {
        return ColumnType::Quantitative;
    }
    let distinct: BTreeSet<String> = texts.iter().map(|t| t.to_lowercase()).collect();
    if distinct.len() <= cfg.distinct_cutoff
        && ORDERED_VOCABULARIES.iter().any(|vocab| distinct.iter().all(|d| vocab.contains(&d.as_str())))
    {
        return ColumnType::Ordinal;
    }
    ColumnType::Nominal
}

fn is_year(text: &str) -> bool {
    text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit())
}

fn is_iso_date(text: &str) -> bool {
    if NaiveDate::parse_from_str(text, "%Y-%m-%d").is_ok() || DateTime::parse_from_rfc3339(text).is_ok() {
        return true;
    }
    let bytes = text.as_bytes();
    bytes.len() == 7
        && bytes[4] == b'-'
        && is_year(&text[..4])
        && NaiveDate::parse_from_str(&format!("{text}-01"), "%Y-%m-%d").is_ok()
}
